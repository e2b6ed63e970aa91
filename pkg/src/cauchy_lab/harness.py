"""Experiment orchestration and CSV reports.

Sweeps fan independent grid cells out to a thread pool and gather them in
grid order, so the written rows never depend on completion order.
"""

import asyncio
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Any, Callable, List, Optional, Sequence

import numpy as np

from cauchy_lab import __version__
from cauchy_lab.conditions import (
    ConditionReport,
    ap_constant,
    hd_constant,
    kss_sufficient,
    necessary_check,
)
from cauchy_lab.config import ExperimentConfig, parse_function_spec, parse_point
from cauchy_lab.core.errors import InvalidParameterError, NonConvergenceError
from cauchy_lab.core.types import INDEX_TOLERANCE, ProbeVerdict, Verdict
from cauchy_lab.exponent import ExponentFunction, dini_lipschitz_modulus
from cauchy_lab.geometry import CurvePath, carleson_verdict
from cauchy_lab.operator import refinement_probe
from cauchy_lab.submult import powerlikeness_indices
from cauchy_lab.vlebesgue import SampledFunction, luxemburg_norm
from cauchy_lab.weights import (
    CompositeWeight,
    khvedelidze_weight,
    membership_check,
    mo_indices,
)

logger = logging.getLogger(__name__)

# operator probes near the spiral accumulation point
SPIRAL_PROBE_MIN_ALPHA = 2.0


@dataclass
class Report:
    """Rows of one command, ready for CSV."""

    command: str
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)
    summary: List[List[Any]] = field(default_factory=list)
    nonconverged: bool = False


def format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else f"{float(value):.12g}"
    if isinstance(value, (list, tuple)):
        return ";".join(format_value(v) for v in value)
    return str(value)


def write_report(report: Report, config: ExperimentConfig, stream: IO[str]):
    """CSV with a comment header carrying version, config hash, grid and seed."""
    stream.write(f"# cauchy-lab {__version__}\n")
    stream.write(f"# command {report.command}\n")
    stream.write(f"# config_sha256 {config.config_hash()}\n")
    stream.write(f"# grid {config.grid_spec().describe()}\n")
    stream.write(f"# seed {config.seed}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([format_value(v) for v in row])
    for row in report.summary:
        writer.writerow([format_value(v) for v in row])


async def _gather_cells(fn: Callable[[Any], Any], cells: Sequence[Any], workers: int) -> List[Any]:
    """Evaluate ``fn`` on every cell in a thread pool; results keep cell order."""
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        tasks = [loop.run_in_executor(pool, fn, cell) for cell in cells]
        return list(await asyncio.gather(*tasks))


@dataclass
class ExperimentContext:
    """Objects built once from a config."""

    config: ExperimentConfig
    curve_factory: Callable[[int], CurvePath]
    curve: CurvePath
    weight: CompositeWeight

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "ExperimentContext":
        factory = config.curve.factory(config.base_dir)
        return cls(
            config=config,
            curve_factory=factory,
            curve=factory(config.curve.nodes),
            weight=config.weight.build(config.base_dir),
        )

    def exponent(self, curve: Optional[CurvePath] = None) -> ExponentFunction:
        return self.config.exponent.parsed().build(curve or self.curve)

    def carleson_stable(self) -> bool:
        grid = self.config.grid
        if self.config.curve.kind in ("segment", "circle"):
            return True
        _, stable = carleson_verdict(
            self.curve_factory,
            grid.carleson_resolutions,
            t_samples=grid.carleson_t_samples,
            r_samples=grid.carleson_r_samples,
        )
        return stable

    def require_probe_curve(self):
        curve = self.config.curve
        if curve.kind == "spiral" and curve.alpha < SPIRAL_PROBE_MIN_ALPHA:
            raise InvalidParameterError(
                f"Operator probes need spiral alpha >= {SPIRAL_PROBE_MIN_ALPHA}, got {curve.alpha}"
            )


async def run_indices(config: ExperimentConfig, workers: int = 4) -> Report:
    """Matuszewska-Orlicz indices against indices of powerlikeness, per factor."""
    ctx = ExperimentContext.from_config(config)
    report = Report(
        "indices",
        ["factor", "label", "m", "M", "alpha", "beta", "agreement", "membership_constant"],
    )
    logger.info(f"Indices for {len(ctx.weight.factors)} factors on '{ctx.curve.label}'")

    if not ctx.weight.factors:
        t = ctx.curve.nodes[ctx.curve.node_count // 2]
        alpha, beta = powerlikeness_indices(ctx.weight, ctx.curve, t)
        report.rows.append(["-", "constant", 0.0, 0.0, alpha, beta, True, 1.0])
        return report

    def cell(index: int):
        anchor, factor = ctx.weight.factors[index]
        constant = float("nan")
        try:
            m, M = mo_indices(factor)
            _, constant = membership_check(factor, (m, M))
        except NonConvergenceError as e:
            logger.warning(f"Factor {index}: {e}")
            m = M = float("nan")
        estimate = powerlikeness_indices(ctx.weight, ctx.curve, anchor)
        agreement = (
            abs(m - estimate.lower) <= INDEX_TOLERANCE
            and abs(M - estimate.upper) <= INDEX_TOLERANCE
        )
        if not agreement:
            logger.warning(
                f"Factor {index} '{factor.label}': (m, M) = ({m:.4f}, {M:.4f}) but "
                f"powerlikeness {estimate.describe()}"
            )
        flagged = not agreement or estimate.nonconverged
        row = [index, factor.label, m, M, estimate.lower, estimate.upper, agreement, constant]
        return row, flagged

    results = await _gather_cells(cell, range(len(ctx.weight.factors)), workers)
    report.rows = [row for row, _ in results]
    report.nonconverged = any(flagged for _, flagged in results)
    return report


def _verdict_or_skip(enabled: bool, fn: Callable[[], ConditionReport]) -> Any:
    return fn().verdict if enabled else "skipped"


def _hd_vs_probe(hd: Any, probe: ProbeVerdict) -> str:
    if not isinstance(hd, Verdict) or hd == Verdict.INCONCLUSIVE:
        return "n/a"
    if probe == ProbeVerdict.INCONCLUSIVE:
        return "n/a"
    return "agree" if (hd == Verdict.FINITE) == (probe == ProbeVerdict.BOUNDED) else "disagree"


async def run_boundary_sweep(config: ExperimentConfig, workers: int = 4) -> Report:
    """Khvedelidze (p, λ) sweep: index criterion, conditions and operator probe."""
    ctx = ExperimentContext.from_config(config)
    sweep, op = config.sweep, config.operator
    ctx.require_probe_curve()
    anchor = parse_point(sweep.anchor)
    grid = config.grid_spec()
    stable = ctx.carleson_stable()
    report = Report(
        "sweep",
        [
            "p", "lambda", "kss_satisfied", "boundary", "margin_lower", "margin_upper",
            "ap_verdict", "hd_verdict", "probe_verdict", "hd_vs_probe", "region_match",
            "estimates",
        ],
    )
    cells = [(p, lam) for p in sweep.p_values for lam in sweep.lambdas]
    logger.info(f"Boundary sweep over {len(cells)} cells, meshes {op.meshes}")

    def cell(params):
        p, lam = params
        w = khvedelidze_weight([anchor], [lam])
        p_fn = ExponentFunction.constant(ctx.curve, p)
        kss = kss_sufficient(p_fn, w, carleson_verdict=stable)
        lower, upper = kss.margins[0]
        boundary = min(abs(lower), abs(upper)) < 1e-9
        ap = _verdict_or_skip(sweep.conditions, lambda: ap_constant(ctx.curve, p_fn, w, grid))
        hd = _verdict_or_skip(sweep.conditions, lambda: hd_constant(ctx.curve, p_fn, w, grid))
        estimates, probe = refinement_probe(
            ctx.curve_factory, w, p, op.meshes, trials=op.trials, seed=config.seed
        )
        match = boundary or kss.satisfied == (probe == ProbeVerdict.BOUNDED)
        return [
            p, lam, kss.satisfied, boundary, lower, upper, ap, hd, probe,
            _hd_vs_probe(hd, probe), match, estimates,
        ]

    report.rows = await _gather_cells(cell, cells, workers)
    mismatches = sum(1 for row in report.rows if not row[10])
    report.summary.append(["summary", "region_mismatches", mismatches])
    if mismatches:
        logger.warning(f"{mismatches} sweep cells disagree with the index strip")
    return report


def _empirical_epsilon0(rows: List[List[Any]]) -> float:
    """Largest |ε| below which every probed ε is bounded."""
    probed = sorted((abs(r[0]), r[4]) for r in rows if isinstance(r[4], ProbeVerdict))
    bound = 0.0
    for magnitude, verdict in probed:
        if verdict != ProbeVerdict.BOUNDED:
            return magnitude if bound else 0.0
        bound = magnitude
    return float("inf") if probed else float("nan")


async def run_stability_probe(config: ExperimentConfig, workers: int = 4) -> Report:
    """Margins, conditions and probe for w^(1+ε) over the ε grid."""
    ctx = ExperimentContext.from_config(config)
    if config.stability.probe:
        ctx.require_probe_curve()
    p_fn = ctx.exponent()
    necessary = necessary_check(p_fn, ctx.weight, config.stability.epsilons)
    grid = config.grid_spec()
    op = config.operator
    spec = config.exponent.parsed()
    report = Report(
        "stability", ["epsilon", "margins", "nonstrict_holds", "ap_verdict", "probe_verdict"]
    )

    def cell(entry):
        epsilon, margins = entry
        w = ctx.weight.powered(1.0 + epsilon)
        flat = [m for pair in margins for m in pair]
        ap = ap_constant(ctx.curve, p_fn, w, grid).verdict
        probe: Any = "skipped"
        if config.stability.probe:
            _, probe = refinement_probe(
                ctx.curve_factory, w, spec.build, op.meshes, trials=op.trials, seed=config.seed
            )
        return [epsilon, flat, all(m >= 0.0 for m in flat), ap, probe]

    report.rows = await _gather_cells(cell, necessary.sweep, workers)
    report.summary.append(["summary", "epsilon0_index", necessary.epsilon0])
    report.summary.append(["summary", "epsilon0_empirical", _empirical_epsilon0(report.rows)])
    logger.info(f"Index-identity epsilon0 = {necessary.epsilon0:g}")
    return report


def run_carleson(config: ExperimentConfig) -> Report:
    ctx = ExperimentContext.from_config(config)
    grid = config.grid
    report = Report("carleson", ["nodes", "carleson_constant"])
    constants, stable = carleson_verdict(
        ctx.curve_factory,
        grid.carleson_resolutions,
        t_samples=grid.carleson_t_samples,
        r_samples=grid.carleson_r_samples,
    )
    report.rows = [[n, c] for n, c in zip(grid.carleson_resolutions, constants)]
    report.summary.append(["summary", "stable", stable])
    return report


def run_norm(config: ExperimentConfig) -> Report:
    ctx = ExperimentContext.from_config(config)
    kind, centre, value = parse_function_spec(config.function)
    if kind == "constant":
        f = SampledFunction.constant(ctx.curve, value)
    else:
        f = SampledFunction.from_function(
            ctx.curve, lambda z: np.maximum(np.abs(z - centre), 1e-300) ** value
        )
    p_fn = ctx.exponent()
    norm = luxemburg_norm(f, ctx.weight, p_fn)
    report = Report("norm", ["function", "exponent", "weight", "norm", "dini_modulus"])
    report.rows.append(
        [config.function, config.exponent.spec, ctx.weight.describe(), norm,
         dini_lipschitz_modulus(p_fn)]
    )
    return report


def run_condition(config: ExperimentConfig, kind: str) -> Report:
    """`apcheck` / `hdcheck`: the grid cells and verdict of one supremum."""
    ctx = ExperimentContext.from_config(config)
    fn = ap_constant if kind == "ap" else hd_constant
    result = fn(ctx.curve, ctx.exponent(), ctx.weight, config.grid_spec())
    report = Report(f"{kind}check", ["t_index", "R", "value"])
    report.rows = [list(c) for c in result.cells]
    report.summary.append(["verdict", result.verdict, result.constant_estimate])
    return report


def run_opnorm(config: ExperimentConfig) -> Report:
    ctx = ExperimentContext.from_config(config)
    op = config.operator
    ctx.require_probe_curve()
    spec = config.exponent.parsed()
    report = Report("opnorm", ["nodes", "estimate"])
    estimates, verdict = refinement_probe(
        ctx.curve_factory, ctx.weight, spec.build, op.meshes, trials=op.trials, seed=config.seed
    )
    report.rows = [[n, e] for n, e in zip(op.meshes, estimates)]
    report.summary.append(["summary", "verdict", verdict])
    return report
