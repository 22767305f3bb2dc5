from .encoder import (
    ThetaSchedule,
    RotaryEncoder,
    make_schedule,
    apply_rotary,
    dense_rotation_matrix,
    dense_rotate,
    get_encoder,
)
from .score import (
    Complex2DPair,
    rope_score,
    relative_rope_score,
    complex_rope_score_2d,
)
