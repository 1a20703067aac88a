"""
Command-Line Application for the Zero Cell Analyzer
"""
import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from special.functions import DomainError, OverflowFlagError, ZeroCellError
from quadrature.integrator import QuadConfig
from quadrature.kronrod import QuadRule
from asymptotics.regime import IntensityRule
from zerocell_analyzer import (
    CALIBRATION_COLUMNS,
    FIG1_DIMENSIONS,
    FIG1_EXPONENTS,
    FIG2_DIMENSIONS,
    REGIME_COLUMNS,
    SIMULATION_COLUMNS,
    SWEEP_COLUMNS,
    SweepMode,
    SweepSpec,
    ZeroCellAnalyzer,
    row_failed,
    summary_frame,
)

load_dotenv()

logger = logging.getLogger('zerocell')

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_CROSS_VALIDATION = 4


class UsageError(ZeroCellError):
    """Flags that parse but do not make a valid request"""


class RunConfig(BaseModel):
    """Merged settings of one invocation: defaults, then the JSON config file, then flags"""
    model_config = ConfigDict(extra='forbid', populate_by_name=True)

    n: Optional[int] = Field(None, ge=2)
    r: Optional[float] = Field(None, gt=0, allow_inf_nan=False)
    gamma: Optional[float] = Field(None, gt=0, allow_inf_nan=False)
    lam: Optional[float] = Field(None, gt=0, allow_inf_nan=False, alias='lambda')
    k: int = Field(1, ge=1)
    a: Optional[float] = Field(None, gt=0, allow_inf_nan=False)

    rel_tol: float = Field(1e-9, ge=0)
    abs_tol: float = Field(0.0, ge=0)
    max_subdivisions: int = Field(2000, ge=1)
    rule: QuadRule = QuadRule.GK15

    mode: SweepMode = SweepMode.FIG1
    grid: Optional[str] = None
    dimensions: Optional[str] = None
    exponents: Optional[str] = None
    r_rule: str = 'n'

    reps: int = Field(10_000, ge=100)
    points: int = Field(100_000, ge=100)
    eps_bias: float = Field(1e-4, gt=0, lt=1)
    seed: Optional[int] = Field(None, ge=0)

    n_min: int = Field(2, ge=2)
    n_max: int = Field(24, ge=2)

    threads: int = Field(default_factory=lambda: default_threads(), ge=1)
    out: Optional[str] = None
    json_path: Optional[str] = Field(None, alias='json')
    dump: Optional[str] = None

    def quad_config(self) -> QuadConfig:
        return QuadConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                          max_subdivisions=self.max_subdivisions, rule=self.rule)

    def intensity(self):
        """(IntensityRule, level) for commands accepting --gamma or --lambda"""
        if (self.gamma is None) == (self.lam is None):
            raise UsageError("Exactly one of --gamma and --lambda is required")
        if self.lam is not None:
            return IntensityRule.CALIBRATED, self.lam
        return IntensityRule.CONSTANT, self.gamma

    def require(self, *names: str):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise UsageError(f"Missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


def default_threads() -> int:
    """Worker count: ZEROCELL_THREADS if set, else the machine parallelism"""
    value = os.getenv('ZEROCELL_THREADS')
    if value:
        try:
            return int(value)
        except ValueError:
            raise UsageError(f"ZEROCELL_THREADS must be an integer, got '{value}'") from None
    return os.cpu_count() or 1


def _int_list(text: str) -> List[int]:
    """Parse '2,3,4' or '2-20' (or a mix) into a list of integers"""
    values = []
    try:
        for part in text.split(','):
            part = part.strip()
            if '-' in part:
                lo, hi = part.split('-', 1)
                values.extend(range(int(lo), int(hi) + 1))
            elif part:
                values.append(int(part))
    except ValueError:
        raise UsageError(f"Cannot parse dimension list '{text}'") from None
    return values


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise UsageError(f"Cannot parse exponent list '{text}'") from None


def _grid(text: str) -> List[tuple]:
    """Parse 'n:r,n:r,...' into (n, r) pairs"""
    pairs = []
    for part in text.split(','):
        if not part.strip():
            continue
        try:
            n, r = part.split(':')
            pairs.append((int(n), float(r)))
        except ValueError:
            raise UsageError(f"Cannot parse grid point '{part}', expected n:r") from None
    return pairs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='zerocell',
        description='Moments, variance and simulations of the zero cell of an isotropic Poisson hyperplane tessellation',
    )
    # every option defaults to None so that only explicit flags override the config file
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file with option values (keys are long option names with _)')
    common.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    common.add_argument('--threads', type=int, help='Worker threads (default: ZEROCELL_THREADS or CPU count)')
    common.add_argument('--out', help='CSV output path')
    common.add_argument('--json', dest='json_path', help='JSON summary output path')

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument('--n', type=int, help='Dimension')
    model.add_argument('--r', type=float, help='Distance exponent')
    intensity = model.add_mutually_exclusive_group()
    intensity.add_argument('--gamma', type=float, help='Intensity')
    intensity.add_argument('--lambda', dest='lam', type=float, help='Calibrate gamma so that E[V] = 1/lambda')

    quad = argparse.ArgumentParser(add_help=False)
    quad.add_argument('--rel-tol', type=float, help='Relative quadrature tolerance')
    quad.add_argument('--abs-tol', type=float, help='Absolute quadrature tolerance')
    quad.add_argument('--max-subdivisions', type=int, help='Panel limit per adaptive integral')
    quad.add_argument('--rule', choices=[rule.value for rule in QuadRule], help='Gauss-Kronrod pair')

    sub = parser.add_subparsers(dest='command', required=True)

    moments = sub.add_parser('moments', parents=[common, model], help='Exact mean and moment bounds')
    moments.add_argument('--k', type=int, help='Moment order')

    sub.add_parser('variance', parents=[common, model, quad], help='Variance and its bounds')

    sweep = sub.add_parser('sweep', parents=[common, quad], help='Variance sweep written as CSV')
    sweep.add_argument('--mode', choices=[mode.value for mode in SweepMode], help='fig1, fig2 or custom grid')
    sweep.add_argument('--grid', help="Custom grid 'n:r,n:r,...'")
    sweep.add_argument('--dimensions', help="Dimensions, e.g. '2,3,4' or '2-20'")
    sweep.add_argument('--exponents', help="Exponents for fig1, e.g. '1,2,5,10'")
    sweep.add_argument('--r-rule', help="Exponent rule for fig2: 1, 0.5n, n or 2n")
    sweep_intensity = sweep.add_mutually_exclusive_group()
    sweep_intensity.add_argument('--gamma', type=float, help='Constant intensity')
    sweep_intensity.add_argument('--lambda', dest='lam', type=float, help='Calibrated intensity with E[V] = 1/lambda')

    simulate = sub.add_parser('simulate', parents=[common, model, quad], help='Monte Carlo cross-validation')
    simulate.add_argument('--reps', type=int, help='Replications (>= 100)')
    simulate.add_argument('--points', type=int, help='Hit-or-miss points per replication (n >= 3)')
    simulate.add_argument('--eps-bias', type=float, help='Relative truncation bias allowed')
    simulate.add_argument('--seed', type=int, help='Root seed (required)')
    simulate.add_argument('--dump', help='CSV path for per-replication volumes')

    asympt = sub.add_parser('asympt', parents=[common, quad], help='Regime table for r = a n, calibrated intensity')
    asympt.add_argument('--a', type=float, help='Ratio r / n')
    asympt.add_argument('--lambda', dest='lam', type=float, help='Reciprocal target mean')
    asympt.add_argument('--n-min', type=int, help='Smallest dimension')
    asympt.add_argument('--n-max', type=int, help='Largest dimension')

    calibrate = sub.add_parser('calibrate', parents=[common], help='Calibrated intensity gamma_hat')
    calibrate.add_argument('--n', type=int, help='Dimension')
    calibrate.add_argument('--r', type=float, help='Distance exponent')
    calibrate.add_argument('--lambda', dest='lam', type=float, help='Reciprocal target mean')

    return parser


def merge_config(args: argparse.Namespace) -> RunConfig:
    """
    Layer defaults, the optional JSON config file and explicit flags

    Raises:
        UsageError: unreadable config file
        ValidationError: values outside their ranges or unknown keys
    """
    values: Dict = {}
    if args.config:
        try:
            with open(args.config) as f:
                values.update(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"Cannot read config file {args.config}: {e}") from e
        if 'lambda' in values:
            values['lam'] = values.pop('lambda')
        if 'json' in values:
            values['json_path'] = values.pop('json')
    explicit = {key: value for key, value in vars(args).items()
                if value is not None and key not in ('command', 'config', 'verbose')}
    # an explicit intensity flag replaces either intensity from the config file
    if 'gamma' in explicit or 'lam' in explicit:
        values.pop('gamma', None)
        values.pop('lam', None)
    values.update(explicit)
    return RunConfig.model_validate(values)


def cmd_moments(analyzer: ZeroCellAnalyzer, cfg: RunConfig) -> int:
    cfg.require('n', 'r')
    cfg.intensity()
    params = analyzer.resolve_params(cfg.n, cfg.r, cfg.gamma, cfg.lam)
    summary = analyzer.moments(params, cfg.k)
    if cfg.out:
        analyzer.save_table(summary_frame(summary),
                            cfg.out, ('n', 'r', 'gamma', 'k', 'mean', 'lower', 'upper'))
    if cfg.json_path:
        analyzer.save_summary(cfg.json_path)
    return EXIT_OK


def cmd_variance(analyzer: ZeroCellAnalyzer, cfg: RunConfig) -> int:
    cfg.require('n', 'r')
    cfg.intensity()
    params = analyzer.resolve_params(cfg.n, cfg.r, cfg.gamma, cfg.lam)
    row = analyzer.variance(params)
    if cfg.out:
        analyzer.save_table(analyzer.results, cfg.out, SWEEP_COLUMNS)
    if cfg.json_path:
        analyzer.save_summary(cfg.json_path)
    return EXIT_OK if row['converged'] else EXIT_NOT_CONVERGED


def cmd_sweep(analyzer: ZeroCellAnalyzer, cfg: RunConfig) -> int:
    cfg.require('out')
    rule, level = cfg.intensity() if (cfg.gamma is not None or cfg.lam is not None) \
        else (IntensityRule.CONSTANT, 1.0)
    if cfg.mode == SweepMode.FIG1:
        spec = SweepSpec.fig1(
            dimensions=_int_list(cfg.dimensions) if cfg.dimensions else FIG1_DIMENSIONS,
            exponents=_float_list(cfg.exponents) if cfg.exponents else FIG1_EXPONENTS,
            intensity_rule=rule, level=level)
    elif cfg.mode == SweepMode.FIG2:
        spec = SweepSpec.fig2(
            rule=cfg.r_rule,
            dimensions=_int_list(cfg.dimensions) if cfg.dimensions else FIG2_DIMENSIONS,
            intensity_rule=rule, level=level)
    else:
        cfg.require('grid')
        spec = SweepSpec(mode=SweepMode.CUSTOM, grid=_grid(cfg.grid), intensity_rule=rule, level=level)

    df = analyzer.sweep(spec)
    columns = SWEEP_COLUMNS + (('mean_minus_kappa',) if spec.mode == SweepMode.FIG1 else ())
    analyzer.save_table(df, cfg.out, columns)
    if cfg.json_path:
        analyzer.save_summary(cfg.json_path, {'spec': spec, 'rows': len(df)})
    failed = sum(row_failed(row) for _, row in df.iterrows())
    return EXIT_NOT_CONVERGED if failed else EXIT_OK


def cmd_simulate(analyzer: ZeroCellAnalyzer, cfg: RunConfig) -> int:
    cfg.require('n', 'r', 'seed')
    cfg.intensity()
    params = analyzer.resolve_params(cfg.n, cfg.r, cfg.gamma, cfg.lam)
    summary, check = analyzer.simulate(params, cfg.reps, cfg.points, cfg.eps_bias, cfg.seed)
    if cfg.out:
        analyzer.save_table(summary_frame(analyzer.summary), cfg.out, SIMULATION_COLUMNS)
    if cfg.dump:
        frame = summary.to_frame()
        analyzer.save_table(frame, cfg.dump, tuple(frame.columns))
    if cfg.json_path:
        analyzer.save_summary(cfg.json_path)
    return EXIT_OK if check.passed else EXIT_CROSS_VALIDATION


def cmd_asympt(analyzer: ZeroCellAnalyzer, cfg: RunConfig) -> int:
    cfg.require('a', 'lam')
    if cfg.n_max < cfg.n_min:
        raise UsageError("--n-max must not be below --n-min")
    df = analyzer.asympt(cfg.a, cfg.lam, cfg.n_max, cfg.n_min)
    if cfg.out:
        analyzer.save_table(df, cfg.out, REGIME_COLUMNS)
    if cfg.json_path:
        analyzer.save_summary(cfg.json_path)
    return EXIT_NOT_CONVERGED if analyzer.summary['failed'] else EXIT_OK


def cmd_calibrate(analyzer: ZeroCellAnalyzer, cfg: RunConfig) -> int:
    cfg.require('n', 'r', 'lam')
    summary = analyzer.calibrate(cfg.n, cfg.r, cfg.lam)
    if cfg.out:
        analyzer.save_table(summary_frame(summary), cfg.out, CALIBRATION_COLUMNS)
    if cfg.json_path:
        analyzer.save_summary(cfg.json_path)
    return EXIT_OK


HANDLERS = {
    'moments': cmd_moments,
    'variance': cmd_variance,
    'sweep': cmd_sweep,
    'simulate': cmd_simulate,
    'asympt': cmd_asympt,
    'calibrate': cmd_calibrate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    try:
        cfg = merge_config(args)
        analyzer = ZeroCellAnalyzer(cfg.quad_config(), threads=cfg.threads)
        return HANDLERS[args.command](analyzer, cfg)
    except ValidationError as e:
        print(f"✗ Invalid options: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DomainError, OverflowFlagError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE
    except ZeroCellError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"✗ {args.command} failed: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
