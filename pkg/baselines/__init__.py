from .position import (
    SinusoidalTable,
    LearnedAbsolute,
    ShawRelative,
    sinusoidal_encoding,
    additive_inject,
    shaw_clip,
)
