from .adam import AdamOptimizer, MOMENT_PREFIX
