"""
数学性质校验套件

Every suite takes (rng, trials, dims) and returns a SuiteResult. All checks
run at 64-bit precision.
"""
from time import perf_counter
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from analysis.abel import AbelCheckReport, run_abel_trials
from analysis.decay import DecayCurve, decay_curve
from analysis.derivation import DerivationReport, derivation_oracle_2d
from apps.lm_trainer.config import ModelConfig
from apps.lm_trainer.model import ByteLM, build_model
from attention.attention import (
    exp_similarity,
    linear_attention,
    linear_attention_direct,
    rope_linear_attention,
    similarity_attention,
    softmax_attention
)
from kit.constant import AttentionVariant, FeatureMap, PosEncoding, Precision
from kit.object import SuiteResult
from numerics.gradcheck import grad_check
from numerics.rng import Rng
from numerics.tensor import Parameter, Tensor, matmul, softmax_rows
from rotary.encoder import RotaryEncoder, ThetaSchedule, dense_rotate, dense_rotation_matrix, get_encoder, make_schedule
from rotary.score import Complex2DPair, complex_rope_score_2d, relative_rope_score, rope_score


SuiteFunc = Callable[[Rng, int, Sequence[int]], SuiteResult]

MAX_POSITION: int = 512
MAX_DENSE_POSITION: int = 1024
DENSE_DIM: int = 256
COMPLEX_MAX_POSITION: int = 64
LINEAR_TRIALS: int = 12
GRADIENT_SAMPLES: int = 40


def _result(name: str, trials: int, error: float, tolerance: float, start: float, detail: str = "") -> SuiteResult:
    """"""
    return SuiteResult(
        name=name,
        passed=bool(error < tolerance),
        trials=trials,
        max_error=float(error),
        tolerance=tolerance,
        elapsed=perf_counter() - start,
        detail=detail
    )


def check_shift_invariance(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    score(m, n) == score(m + s, n + s) == relative score at n - m.
    """
    start: float = perf_counter()
    error: float = 0.0

    for dim in dims:
        schedule: ThetaSchedule = make_schedule(dim)
        for _ in range(trials):
            q: np.ndarray = rng.normal(dim)
            k: np.ndarray = rng.normal(dim)
            m: int = rng.integers(0, MAX_POSITION + 1)
            n: int = rng.integers(0, MAX_POSITION + 1)
            s: int = rng.integers(0, MAX_POSITION + 1)

            base: float = rope_score(q, k, m, n, schedule)
            error = max(
                error,
                abs(base - rope_score(q, k, m + s, n + s, schedule)),
                abs(base - relative_rope_score(q, k, n - m, schedule)),
            )

    return _result("shift_invariance", trials * len(dims), error, 1e-9, start)


def check_sparse_dense(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Table-driven rotation equals the explicit block-diagonal product.
    """
    start: float = perf_counter()
    error: float = 0.0
    all_dims: List[int] = sorted(set(dims) | {DENSE_DIM})

    for dim in all_dims:
        schedule: ThetaSchedule = make_schedule(dim)
        encoder: RotaryEncoder = get_encoder(schedule)
        for _ in range(trials):
            x: np.ndarray = rng.normal((4, dim))
            positions: np.ndarray = rng.integers(-MAX_DENSE_POSITION, MAX_DENSE_POSITION + 1, 4)

            sparse: np.ndarray = encoder.rotate(x, positions)
            dense: np.ndarray = dense_rotate(schedule, x, positions)
            error = max(error, float(np.abs(sparse - dense).max()))

    return _result("sparse_dense", trials * len(all_dims), error, 1e-12, start)


def check_complex_real(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Re[q conj(k) e^{i(m-n)theta}] against the real rotation-matrix score in 2D.
    """
    start: float = perf_counter()
    error: float = 0.0

    for _ in range(trials):
        q: np.ndarray = rng.normal(2)
        k: np.ndarray = rng.normal(2)
        m: int = rng.integers(0, COMPLEX_MAX_POSITION + 1)
        n: int = rng.integers(0, COMPLEX_MAX_POSITION + 1)
        theta: float = rng.uniform(0.01, np.pi)

        schedule: ThetaSchedule = ThetaSchedule(dim=2, thetas=(theta,))
        real: float = float((dense_rotation_matrix(schedule, m) @ q) @ (dense_rotation_matrix(schedule, n) @ k))
        complex_form: float = complex_rope_score_2d(
            Complex2DPair.from_vector(q), Complex2DPair.from_vector(k), m, n, theta
        )
        error = max(error, abs(real - complex_form))

    # Default schedule in 2D has theta = 1 and goes through the table path.
    schedule = make_schedule(2)
    for _ in range(trials):
        q = rng.normal(2)
        k = rng.normal(2)
        m = rng.integers(0, COMPLEX_MAX_POSITION + 1)
        n = rng.integers(0, COMPLEX_MAX_POSITION + 1)
        complex_form = complex_rope_score_2d(
            Complex2DPair.from_vector(q), Complex2DPair.from_vector(k), m, n, 1.0
        )
        error = max(error, abs(rope_score(q, k, m, n, schedule) - complex_form))

    return _result("complex_real", 2 * trials, error, 1e-12, start)


def check_orthogonality(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    ||R_m x|| == ||x|| and R_m^T R_n == R_{n-m} for n >= m.
    """
    start: float = perf_counter()
    error: float = 0.0

    for dim in dims:
        schedule: ThetaSchedule = make_schedule(dim)
        encoder: RotaryEncoder = get_encoder(schedule)
        for _ in range(trials):
            m: int = rng.integers(0, MAX_POSITION + 1)
            n: int = rng.integers(m, MAX_POSITION + 1)
            x: np.ndarray = rng.normal(dim)

            rotated: np.ndarray = encoder.rotate(x, m)
            error = max(error, abs(float(np.linalg.norm(rotated) - np.linalg.norm(x))))

            product: np.ndarray = dense_rotation_matrix(schedule, m).T @ dense_rotation_matrix(schedule, n)
            error = max(error, float(np.abs(product - dense_rotation_matrix(schedule, n - m)).max()))

    return _result("orthogonality", trials * len(dims), error, 1e-12, start)


def check_decay(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    d = 128: exact E(0), decreasing windowed means and a small far tail.
    """
    start: float = perf_counter()
    dim: int = 128
    curve: DecayCurve = decay_curve(dim, 250)

    expected: float = (dim / 2 + 1) / 2
    origin_error: float = abs(float(curve.values[0]) - expected)
    decreasing: bool = curve.is_windowed_decreasing(25, 100)
    tail: float = curve.range_mean(225, 250)
    small_tail: bool = tail < 0.25 * expected

    detail: str = f"E(0)={curve.values[0]:.12g} windowed_decreasing={decreasing} tail_mean={tail:.6g}"
    result: SuiteResult = _result("decay", 1, origin_error, 1e-12, start, detail)
    result.passed = result.passed and decreasing and small_tail
    return result


def check_abel(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Summation-by-parts identity, chained bound and complex score form.
    """
    start: float = perf_counter()
    report: AbelCheckReport = run_abel_trials(rng, trials, (4, 64, 128), MAX_POSITION)

    error: float = max(report.max_identity_residual, report.max_score_residual)
    detail: str = f"bound_violations={report.bound_violations}"
    result: SuiteResult = _result("abel", report.trials, error, 1e-10, start, detail)
    result.passed = result.passed and report.bound_violations == 0
    return result


def check_derivation(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """"""
    start: float = perf_counter()
    report: DerivationReport = derivation_oracle_2d(rng, trials, MAX_POSITION)

    error: float = max(
        report.max_initial_residual,
        report.max_radial_residual,
        report.max_angle_residual,
        report.max_relative_residual,
        report.max_matrix_residual,
    )
    detail: str = (
        f"initial={report.max_initial_residual:.3g} radial={report.max_radial_residual:.3g} "
        f"angle={report.max_angle_residual:.3g} relative={report.max_relative_residual:.3g}"
    )
    result: SuiteResult = _result("derivation_2d", report.trials, error, report.relative_tolerance, start, detail)
    result.passed = report.passed
    return result


def check_linear_attention(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Regrouped linear attention equals the double loop; the rotary variant
    shares the unrotated denominator.
    """
    start: float = perf_counter()
    error: float = 0.0
    denominators_equal: bool = True
    count: int = 0

    for _ in range(min(trials, LINEAR_TRIALS)):
        seq: int = rng.integers(1, 65)
        dim: int = 2 * rng.integers(1, 33)
        q: np.ndarray = rng.normal((seq, dim))
        k: np.ndarray = rng.normal((seq, dim))
        v: np.ndarray = rng.normal((seq, dim))

        for feature_map in FeatureMap:
            for causal in (False, True):
                fast, denominator = linear_attention(q, k, v, feature_map, causal, return_denominator=True)
                direct, direct_denominator = linear_attention_direct(q, k, v, feature_map, causal)
                error = max(
                    error,
                    float(np.abs(fast.data - direct).max()),
                    float(np.abs(denominator.data - direct_denominator).max() / np.abs(direct_denominator).max()),
                )

                _, rotary_denominator = rope_linear_attention(
                    q, k, v, feature_map, causal=causal, return_denominator=True
                )
                denominators_equal = denominators_equal and np.array_equal(rotary_denominator.data, denominator.data)
                count += 1

    result: SuiteResult = _result(
        "linear_attention", count, error, 1e-10, start, f"denominators_identical={denominators_equal}"
    )
    result.passed = result.passed and denominators_equal
    return result


def check_softmax_attention(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Row sums, generic similarity form and rotary shift equivariance.
    """
    start: float = perf_counter()
    error: float = 0.0
    shift_error: float = 0.0
    count: int = min(trials, 100)

    for _ in range(count):
        seq: int = rng.integers(1, 9)
        dim: int = 2 * rng.integers(1, 9)
        q: np.ndarray = rng.normal((seq, dim))
        k: np.ndarray = rng.normal((seq, dim))
        v: np.ndarray = rng.normal((seq, dim))

        output = softmax_attention(q, k, v)
        error = max(error, float(np.abs(output.weights.data.sum(axis=-1) - 1).max()))

        generic: np.ndarray = similarity_attention(q, k, v, exp_similarity(dim))
        error = max(error, float(np.abs(generic - output.output.data).max()))

        encoder: RotaryEncoder = get_encoder(make_schedule(dim))
        positions: np.ndarray = np.arange(seq)
        offset: int = rng.integers(0, MAX_POSITION + 1)
        plain = softmax_attention(encoder.rotate(q, positions), encoder.rotate(k, positions), v, causal=True)
        shifted = softmax_attention(
            encoder.rotate(q, positions + offset), encoder.rotate(k, positions + offset), v, causal=True
        )
        shift_error = max(shift_error, float(np.abs(plain.output.data - shifted.output.data).max()))

    detail: str = f"shift_error={shift_error:.3g}"
    result: SuiteResult = _result("softmax_attention", count, error, 1e-12, start, detail)
    result.passed = result.passed and shift_error < 1e-9
    return result


def check_numerics(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Softmax normalization, matmul associativity and gradient checks on small graphs.
    """
    start: float = perf_counter()
    softmax_error: float = 0.0
    chain_error: float = 0.0
    count: int = min(trials, 100)

    for _ in range(count):
        x: np.ndarray = rng.normal((4, 6), 3.0)
        probs: np.ndarray = softmax_rows(Tensor(x)).data
        shifted: np.ndarray = softmax_rows(Tensor(x + rng.normal((4, 1), 10.0))).data
        softmax_error = max(
            softmax_error,
            float(np.abs(probs.sum(axis=-1) - 1).max()),
            float(np.abs(probs - shifted).max()),
        )

        a, b, c, d = (Tensor(rng.normal((4, 4))) for _ in range(4))
        left: np.ndarray = matmul(matmul(matmul(a, b), c), d).data
        right: np.ndarray = matmul(a, matmul(b, matmul(c, d))).data
        chain_error = max(chain_error, float(np.abs(left - right).max()))

    w: Parameter = Parameter(np.array(3.0), "w")
    quadratic_error: float = grad_check(lambda: w * w, [w], rng, samples=1)

    weight: Parameter = Parameter(rng.normal((6, 5)), "weight")
    gain: Parameter = Parameter(np.ones(5), "gain")
    bias: Parameter = Parameter(rng.normal(5, 0.1), "bias")
    inputs: Tensor = Tensor(rng.normal((3, 4, 6), 0.5))

    def composite() -> Tensor:
        hidden: Tensor = (inputs @ weight + bias).gelu()
        normed: Tensor = softmax_rows(hidden * gain).log()
        return (normed * normed).mean() + (hidden.tanh() * hidden.exp()).sum() * 0.01

    composite_error: float = grad_check(composite, [weight, gain, bias], rng, samples=30)

    detail: str = (
        f"softmax={softmax_error:.3g} chain={chain_error:.3g} "
        f"quadratic={quadratic_error:.3g} composite={composite_error:.3g}"
    )
    result: SuiteResult = _result("numerics", count, composite_error, 1e-4, start, detail)
    result.passed = (
        result.passed
        and softmax_error < 1e-12
        and chain_error < 1e-10
        and quadratic_error < 1e-9
    )
    return result


def check_model_gradient(rng: Rng, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Finite-difference check of the smallest byte model, one attention variant each.
    """
    start: float = perf_counter()
    error: float = 0.0
    variants: Tuple[Tuple[AttentionVariant, PosEncoding], ...] = (
        (AttentionVariant.SOFTMAX, PosEncoding.ROPE),
        (AttentionVariant.LINEAR_ELU, PosEncoding.ROPE),
        (AttentionVariant.SOFTMAX, PosEncoding.SHAW),
    )

    for attention, pos_encoding in variants:
        config: ModelConfig = ModelConfig(
            d_model=16,
            heads=2,
            layers=1,
            context_len=8,
            attention=attention,
            pos_encoding=pos_encoding,
            precision=Precision.FP64
        )
        model: ByteLM = build_model(config, rng)
        tokens: np.ndarray = rng.integers(0, 256, (2, 9))
        inputs, targets = tokens[:, :-1], tokens[:, 1:]

        error = max(
            error,
            grad_check(lambda: model.loss(inputs, targets), model.parameters(), rng, samples=GRADIENT_SAMPLES)
        )

    return _result("model_gradient", len(variants), error, 1e-4, start)


SUITES: Dict[str, SuiteFunc] = {
    "shift_invariance": check_shift_invariance,
    "sparse_dense": check_sparse_dense,
    "complex_real": check_complex_real,
    "orthogonality": check_orthogonality,
    "decay": check_decay,
    "abel": check_abel,
    "derivation_2d": check_derivation,
    "linear_attention": check_linear_attention,
    "softmax_attention": check_softmax_attention,
    "numerics": check_numerics,
    "model_gradient": check_model_gradient,
}
