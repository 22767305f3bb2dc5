"""
命令行入口：verify、decay、bench、train、compare
"""
import argparse
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from analysis.decay import DecayCurve, decay_curve
from apps.lm_trainer import LmTrainerApp, TrainerEngine, build_configs
from apps.lm_trainer.compare import ComparisonResult, compare_runs, format_summary
from apps.lm_trainer.config import ModelConfig, TrainConfig
from apps.verifier import VerifierApp
from apps.verifier.engine import VerifierEngine
from kit.constant import ExitCode, Precision
from kit.engine import MainEngine
from kit.exception import ConfigurationError, NumericError, RopeKitError
from kit.object import BenchResult, SuiteResult
from kit.setting import SETTINGS


DEFAULT_SEED: int = 42

Handler = Callable[[argparse.Namespace, MainEngine], int]


class ArgumentParser(argparse.ArgumentParser):
    """
    Raises instead of exiting so main() owns the exit code.
    """

    def error(self, message: str) -> None:
        """"""
        self.print_usage()
        raise ConfigurationError(message)


def _precision(args: argparse.Namespace, default: Precision) -> Precision:
    """"""
    if args.precision is None:
        return default
    return Precision(args.precision)


def _seed(args: argparse.Namespace) -> int:
    """"""
    return DEFAULT_SEED if args.seed is None else args.seed


def _require_fp64(args: argparse.Namespace, command: str) -> None:
    """"""
    if _precision(args, Precision.FP64) != Precision.FP64:
        raise ConfigurationError(f"{command}只能在64位精度下运行")


def cmd_verify(args: argparse.Namespace, main_engine: MainEngine) -> int:
    """"""
    _require_fp64(args, "verify")
    seed: int = _seed(args)
    trials: int = args.trials if args.trials is not None else SETTINGS["verify.trials"]
    dims: List[int] = args.dims if args.dims is not None else list(SETTINGS["verify.dims"])

    print(f"# verify seed={seed} trials={trials} dims={','.join(str(d) for d in dims)}")

    engine: VerifierEngine = main_engine.get_engine(VerifierApp.app_name)
    results: List[SuiteResult] = engine.run_verification(seed, trials, dims, args.suite)

    print(f"{'suite':<20}{'result':<8}{'trials':>8}{'max_error':>14}{'tolerance':>12}{'seconds':>10}")
    for r in results:
        verdict: str = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<20}{verdict:<8}{r.trials:>8}{r.max_error:>14.3e}{r.tolerance:>12.0e}{r.elapsed:>10.2f}")
        if not r.passed and r.detail:
            print(f"    {r.detail}")

    if all(r.passed for r in results):
        return ExitCode.SUCCESS
    return ExitCode.CHECK_FAILED


def cmd_decay(args: argparse.Namespace, main_engine: MainEngine) -> int:
    """"""
    _require_fp64(args, "decay")
    out: Path = Path(args.out) if args.out else Path(f"decay_d{args.dim}.csv")

    print(f"# decay seed={_seed(args)} dim={args.dim} max_distance={args.max_dist}")
    curve: DecayCurve = decay_curve(args.dim, args.max_dist)
    curve.save_csv(out)

    print(f"E(0) = {curve.values[0]:.17g}")
    if args.max_dist >= 100:
        verdict: str = "decreasing" if curve.is_windowed_decreasing(25, 100) else "not decreasing"
        print(f"windowed means (width 25) over [0, 100]: {verdict}")
    else:
        print("windowed-decay verdict skipped: needs --max-dist >= 100")
    print(f"curve written to {out}")
    return ExitCode.SUCCESS


def cmd_bench(args: argparse.Namespace, main_engine: MainEngine) -> int:
    """"""
    _require_fp64(args, "bench")
    seed: int = _seed(args)
    print(f"# bench seed={seed} dim={args.dim} seq={args.seq} reps={args.reps}")

    engine: VerifierEngine = main_engine.get_engine(VerifierApp.app_name)
    result: BenchResult = engine.run_bench(args.dim, args.seq, args.reps, seed)

    print(f"dense median:  {result.dense_median * 1e3:.3f} ms")
    print(f"sparse median: {result.sparse_median * 1e3:.3f} ms")
    print(f"max abs diff:  {result.max_abs_diff:.3e}")
    print(f"speedup:       {result.speedup:.2f}x")
    return ExitCode.SUCCESS


def _train_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Inline flags, None where not given.
    """
    return {
        "pos_encoding": args.variant,
        "attention": args.attention,
        "precision": args.precision,
        "d_model": args.d_model,
        "heads": args.heads,
        "layers": args.layers,
        "context_len": args.context,
        "steps": args.steps,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "seed": args.seed,
        "corpus_path": args.corpus,
        "metrics_path": args.metrics,
        "checkpoint_path": args.checkpoint,
        "resume_path": args.resume,
        "eval_batches": args.eval_batches,
        "show_progress": False if args.no_progress else None,
    }


def cmd_train(args: argparse.Namespace, main_engine: MainEngine) -> int:
    """"""
    overrides: Dict[str, Any] = _train_overrides(args)
    model_config, train_config = build_configs(args.config, overrides)

    if not train_config.corpus_path:
        raise ConfigurationError("缺少语料路径，请通过--corpus或配置文件corpus_path指定")
    if not train_config.metrics_path:
        train_config.metrics_path = Path(f"metrics_{model_config.pos_encoding.value}.csv")

    print(
        f"# train seed={train_config.seed} variant={model_config.pos_encoding.value} "
        f"attention={model_config.attention.value} precision={model_config.precision.value} "
        f"steps={train_config.steps}"
    )

    engine: TrainerEngine = main_engine.get_engine(LmTrainerApp.app_name)
    losses: List[float] = engine.run_training(model_config, train_config)

    if losses:
        print(f"final loss: {losses[-1]:.6f}")
    for length, value in engine.result_validation.items():
        print(f"validation loss @ {length}: {value:.6f}")
    print(f"metrics: {train_config.metrics_path}")
    if train_config.checkpoint_path:
        print(f"checkpoint: {train_config.checkpoint_path}")
    return ExitCode.SUCCESS


def cmd_compare(args: argparse.Namespace, main_engine: MainEngine) -> int:
    """"""
    print(f"# compare seed={_seed(args)} runs={len(args.paths)}")
    result: ComparisonResult = compare_runs(args.paths, args.labels)
    print(format_summary(result))

    if args.out:
        result.table.to_csv(args.out, float_format="%.17g")
        print(f"aligned curves written to {args.out}")
    return ExitCode.SUCCESS


def build_parser() -> ArgumentParser:
    """"""
    common: ArgumentParser = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"random seed, default {DEFAULT_SEED}")
    common.add_argument(
        "--precision",
        choices=[p.value for p in Precision],
        default=None,
        help="float width, default 64 for verify/decay/bench and 32 for train"
    )

    parser: ArgumentParser = ArgumentParser(prog="rope_kit", description="Rotary position embedding toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    verify = subparsers.add_parser("verify", parents=[common], help="run the property suites")
    verify.add_argument("--dims", type=int, nargs="+", default=None)
    verify.add_argument("--trials", type=int, default=None)
    verify.add_argument("--suite", action="append", default=None, help="run only this suite, repeatable")
    verify.set_defaults(handler=cmd_verify)

    decay = subparsers.add_parser("decay", parents=[common], help="emit the long-term decay curve")
    decay.add_argument("--dim", type=int, default=SETTINGS["decay.dim"])
    decay.add_argument("--max-dist", type=int, default=SETTINGS["decay.max_distance"])
    decay.add_argument("--out", type=Path, default=None)
    decay.set_defaults(handler=cmd_decay)

    bench = subparsers.add_parser("bench", parents=[common], help="dense against sparse rotation timing")
    bench.add_argument("--dim", type=int, default=SETTINGS["bench.dim"])
    bench.add_argument("--seq", type=int, default=SETTINGS["bench.seq"])
    bench.add_argument("--reps", type=int, default=SETTINGS["bench.reps"])
    bench.set_defaults(handler=cmd_bench)

    train = subparsers.add_parser("train", parents=[common], help="train the byte-level model")
    train.add_argument("--config", type=Path, default=None, help="key=value file, flags take precedence")
    train.add_argument("--variant", default=None, help="rope, sinusoidal, learned, shaw or none")
    train.add_argument("--attention", default=None, help="softmax, linear-elu or linear-softmax")
    train.add_argument("--d-model", type=int, default=None)
    train.add_argument("--heads", type=int, default=None)
    train.add_argument("--layers", type=int, default=None)
    train.add_argument("--context", type=int, default=None)
    train.add_argument("--steps", type=int, default=None)
    train.add_argument("--batch-size", type=int, default=None)
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--corpus", type=Path, default=None)
    train.add_argument("--metrics", type=Path, default=None)
    train.add_argument("--checkpoint", type=Path, default=None)
    train.add_argument("--resume", type=Path, default=None)
    train.add_argument("--eval-batches", type=int, default=None)
    train.add_argument("--no-progress", action="store_true")
    train.set_defaults(handler=cmd_train)

    compare = subparsers.add_parser("compare", parents=[common], help="align and summarize metrics files")
    compare.add_argument("paths", type=Path, nargs="+")
    compare.add_argument("--labels", nargs="+", default=None)
    compare.add_argument("--out", type=Path, default=None)
    compare.set_defaults(handler=cmd_compare)

    return parser


def exit_code_for(error: BaseException) -> int:
    """"""
    if isinstance(error, NumericError):
        return ExitCode.CHECK_FAILED
    return ExitCode.USAGE_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    """"""
    parser: ArgumentParser = build_parser()
    try:
        args: argparse.Namespace = parser.parse_args(argv)
    except ConfigurationError as e:
        print(f"error: {e}")
        return ExitCode.USAGE_ERROR
    except SystemExit as e:
        return int(e.code or 0)

    main_engine: MainEngine = MainEngine()
    main_engine.add_app(VerifierApp)
    trainer: TrainerEngine = main_engine.add_app(LmTrainerApp)
    trainer.init_engine()

    try:
        return args.handler(args, main_engine)
    except (RopeKitError, IndexError, OSError) as e:
        main_engine.write_log(f"命令执行失败：{e!r}", "cli")
        print(f"error: {e}")
        return exit_code_for(e)
    finally:
        main_engine.close()
