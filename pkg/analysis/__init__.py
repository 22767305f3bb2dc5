from .decay import DecayCurve, DecayBound, decay_curve, decay_bound
from .abel import AbelCheckReport, abel_identity_check, run_abel_trials, pair_products, partial_sums
from .derivation import DerivationReport, derivation_oracle_2d, accumulated_angle, encode_2d
