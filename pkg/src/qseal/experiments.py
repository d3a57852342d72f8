"""Monte Carlo campaigns over seal -> strategy -> check rounds.

Trials are simulated in blocks of whole arrays. Block ``b`` of sweep point
``p`` draws from ``rng.stream(seed, p, b)`` and the block layout depends only
on the config, so results are identical for any worker count. Reports are
aggregated from integer counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import stats as sps

from . import analytics, protocol
from . import quantum as qc
from .adversary import CollectiveAttack, IndividualAttack, Policy, apply_individual, attack_collective
from .rng import stream
from .stats import Estimate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
BLOCK_QUBITS = 2 ** 18
SWEEP_VARIABLES = ("n", "Theta", "alpha", "k", "theta_prime", "m", "j", "pin_theta")


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ParamsSpec(_Strict):
    n: int = Field(ge=1)
    Theta: float = Field(gt=0, lt=math.pi / 4, validation_alias=AliasChoices("Theta", "theta"))
    alpha: float = Field(gt=0, lt=0.5)
    seed: int = 0


class FakeSpec(_Strict):
    theta_prime: float | None = None
    theta_primes: list[float] | None = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.theta_prime is None) == (self.theta_primes is None):
            raise ValueError("fake needs exactly one of theta_prime or theta_primes")
        return self


class NoneStrategy(_Strict):
    type: Literal["none"]


class HonestStrategy(_Strict):
    type: Literal["honest"]


class IndividualStrategy(_Strict):
    type: Literal["individual"]
    k: int | None = Field(default=None, ge=0)
    indices: list[int] | None = None
    fake: FakeSpec | None = None

    @model_validator(mode="after")
    def _indices(self):
        if (self.k is None) == (self.indices is None):
            raise ValueError("individual strategy needs exactly one of k or indices")
        return self


class CollectiveStrategy(_Strict):
    type: Literal["collective"]
    policy: Literal["random", "prefix", "parity", "explicit"]
    m: int | None = Field(default=None, ge=1)
    j: int | None = Field(default=None, ge=0)
    indices: list[int] | None = None
    fake_rotation: float | None = None


StrategySpec = Annotated[Union[NoneStrategy, HonestStrategy, IndividualStrategy, CollectiveStrategy],
                         Field(discriminator="type")]


class SweepSpec(_Strict):
    variable: Literal[SWEEP_VARIABLES]
    values: list[float] = Field(min_length=1)


class OutputSpec(_Strict):
    path: str | None = None
    format: Literal["json", "csv"] = "json"


class ExperimentConfig(_Strict):
    version: Literal[1] = SCHEMA_VERSION
    params: ParamsSpec
    strategy: StrategySpec
    trials: int = Field(ge=1)
    pin_theta: float | None = None
    sweep: SweepSpec | None = None
    output: OutputSpec = OutputSpec()
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _consistent(self):
        for point in self.points():
            point._check_point()
        return self

    def protocol_params(self) -> protocol.ProtocolParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return protocol.ProtocolParams(self.params.n, self.params.Theta, self.params.alpha, self.params.seed)

    def points(self) -> list["ExperimentConfig"]:
        if self.sweep is None:
            return [self]
        return [with_value(self, self.sweep.variable, v) for v in self.sweep.values]

    def _check_point(self):
        try:
            params = self.protocol_params()
        except protocol.ParamError as exc:
            raise ValueError(str(exc)) from exc
        if self.pin_theta is not None and abs(self.pin_theta) > params.half_width:
            raise ValueError(f"pin_theta={self.pin_theta!r} outside [-{params.half_width:g}, {params.half_width:g}]")
        strat = build_strategy(self.strategy, params.n)
        if isinstance(strat, IndividualAttack):
            strat.validate(params)
        elif isinstance(strat, CollectiveAttack):
            if params.n > qc.MAX_DENSE_QUBITS:
                raise ValueError(f"collective strategies need n <= {qc.MAX_DENSE_QUBITS}")
            strat.validate(params.n)


def with_value(config: ExperimentConfig, variable: str, value: float) -> ExperimentConfig:
    """Config variant with one sweep variable set; the sweep itself is dropped."""
    data = config.model_dump(exclude={"sweep"})
    if variable in ("n", "Theta", "alpha"):
        data["params"][variable] = int(value) if variable == "n" else float(value)
    elif variable == "pin_theta":
        data["pin_theta"] = float(value)
    elif variable == "k":
        data["strategy"].update(k=int(value), indices=None)
    elif variable == "theta_prime":
        data["strategy"]["fake"] = {"theta_prime": float(value)}
    elif variable in ("m", "j"):
        data["strategy"][variable] = int(value)
    return ExperimentConfig.model_validate(data)


def pin_thetas(config: ExperimentConfig, theta_value: float) -> ExperimentConfig:
    """Variant where every sealed qubit uses ``theta_value`` instead of a random angle."""
    data = config.model_dump()
    data["pin_theta"] = float(theta_value)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from exc


def build_strategy(spec, n: int):
    """Turn a strategy record into ``"none"``, ``"honest"`` or an attack object."""
    if isinstance(spec, NoneStrategy):
        return "none"
    if isinstance(spec, HonestStrategy):
        return "honest"
    if isinstance(spec, IndividualStrategy):
        indices = tuple(range(spec.k)) if spec.indices is None else tuple(spec.indices)
        tp = None
        if spec.fake is not None:
            tp = spec.fake.theta_prime if spec.fake.theta_primes is None else tuple(spec.fake.theta_primes)
        return IndividualAttack(indices, tp)
    if spec.policy == "explicit":
        if spec.indices is None:
            raise ValueError("explicit policy needs indices")
        return CollectiveAttack(Policy.EXPLICIT, subspace=qc.Subspace(n, spec.indices),
                                fake_rotation=spec.fake_rotation)
    return CollectiveAttack(Policy(spec.policy), m=spec.m, j=spec.j, fake_rotation=spec.fake_rotation)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: not valid {path.suffix.lstrip('.') or 'json'}: {exc}") from exc
    return parse_config(raw, source=str(path))


def parse_config(raw: dict, source: str = "<config>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {format_validation_error(exc)}") from exc


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


@dataclass
class TrialReport:
    config: dict
    seed: int
    mode: str
    sweep_variable: str | None
    sweep_value: float | None
    estimate: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int
    counted: int
    analytic_ref: float | None = None
    bit_error_rate: float | None = None
    bit_error_ref: float | None = None
    eps_bound: float | None = None
    bound_raw: float | None = None
    bound_clamped: float | None = None
    wall_time: float = 0.0

    def sigma(self) -> float | None:
        if self.analytic_ref is None or not self.counted:
            return None
        p = self.analytic_ref
        return math.sqrt(max(p * (1 - p), 0.0) / self.counted)

    def agrees(self, n_sigma: float = 3.0) -> bool | None:
        """Estimate within ``n_sigma`` binomial sigma of the analytic reference."""
        s = self.sigma()
        if s is None:
            return None
        return abs(self.estimate - self.analytic_ref) <= n_sigma * s + 1e-15

    def to_dict(self, drop_time: bool = False) -> dict:
        d = asdict(self)
        if drop_time:
            d.pop("wall_time")
        return d


@dataclass
class _Counts:
    passes: int = 0
    counted: int = 0
    bit_errors: int = 0
    bits_read: int = 0

    def __iadd__(self, other: "_Counts"):
        self.passes += other.passes
        self.counted += other.counted
        self.bit_errors += other.bit_errors
        self.bits_read += other.bits_read
        return self


def _block_sizes(trials: int, n: int, dense: bool) -> list[int]:
    per = max(1, BLOCK_QUBITS // (2 ** n if dense else n))
    full, rest = divmod(trials, per)
    return [per] * full + ([rest] if rest else [])


def _simulate_block(config: ExperimentConfig, point: int, block: int, size: int) -> _Counts:
    params = config.protocol_params()
    strategy = build_strategy(config.strategy, params.n)
    rng = stream(params.seed, point, block)
    n = params.n
    bits = rng.integers(0, 2, (size, n), dtype=np.int8)
    if config.pin_theta is None:
        thetas = rng.uniform(-params.half_width, params.half_width, (size, n))
    else:
        thetas = np.full((size, n), config.pin_theta)
    targets = qc.make_qubit(bits, thetas)
    c = _Counts()

    if isinstance(strategy, CollectiveAttack):
        for t in range(size):
            out = attack_collective(qc.ProductState(targets[t]), strategy, rng)
            sealed = protocol.SealedString(params, bits[t], thetas[t], out.state, config.pin_theta is not None)
            report, _ = protocol.check(sealed, rng)
            if out.collapsed:
                c.counted += 1
                c.passes += report.verdict is protocol.Verdict.UNREAD
        return c

    state = targets
    if strategy == "honest":
        learned, state = qc.measure_computational(targets, rng)
        c.bit_errors = int(np.count_nonzero(learned != bits))
        c.bits_read = learned.size
    elif isinstance(strategy, IndividualAttack):
        learned, state = apply_individual(targets, strategy, rng)
        idx = np.asarray(strategy.read_indices, dtype=np.intp)
        c.bit_errors = int(np.count_nonzero(learned != bits[:, idx]))
        c.bits_read = learned.size
    passed, _ = qc.project_onto_pure(state, targets, rng)
    c.passes = int(np.count_nonzero(passed.all(axis=1)))
    c.counted = size
    return c


def _simulate_block_star(args):
    return _simulate_block(*args)


def _references(config: ExperimentConfig, strategy) -> dict:
    params = config.protocol_params()
    n, pin = params.n, config.pin_theta
    refs: dict[str, Any] = {"eps_bound": analytics.eps_bound(params.Theta, params.alpha, n)}

    def avg(tp):
        return analytics.avg_pass_prob(params.Theta, params.alpha, n, tp)

    if strategy == "none":
        refs["analytic_ref"] = 1.0
    elif strategy == "honest" or isinstance(strategy, IndividualAttack):
        k = n if strategy == "honest" else strategy.k
        if isinstance(strategy, IndividualAttack) and strategy.fakes:
            tps = np.broadcast_to(np.asarray(strategy.theta_prime, dtype=float), (k,))
        else:
            tps = np.zeros(k)
        if pin is not None:
            refs["analytic_ref"] = float(np.prod(analytics.pass_prob_fake(np.full(k, pin), tps))) if k else 1.0
        else:
            refs["analytic_ref"] = float(np.prod([avg(float(tp)) for tp in tps]))
        refs["bit_error_ref"] = (math.sin(pin) ** 2 if pin is not None
                                 else analytics.avg_bit_error(params.Theta, params.alpha, n))
    elif isinstance(strategy, CollectiveAttack) and pin is not None:
        k = analytics.info_bound(n, strategy.target_dim(n))
        raw = analytics.evade_bound_collective(np.full(n, pin), k)
        refs["bound_raw"], refs["bound_clamped"] = raw, min(raw, 1.0)
    return refs


def run_point(config: ExperimentConfig, point: int = 0, sweep_variable: str | None = None,
              sweep_value: float | None = None) -> TrialReport:
    start = time.perf_counter()
    params = config.protocol_params()
    strategy = build_strategy(config.strategy, params.n)
    dense = isinstance(strategy, CollectiveAttack)
    jobs = [(config, point, b, size) for b, size in enumerate(_block_sizes(config.trials, params.n, dense))]
    total = _Counts()
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for c in pool.map(_simulate_block_star, jobs):
                total += c
    else:
        for job in jobs:
            total += _simulate_block(*job)

    if strategy == "none" and total.passes == total.counted:
        est = Estimate.certain(total.counted)
    else:
        est = Estimate.from_counts(total.passes, total.counted)
    refs = _references(config, strategy)
    return TrialReport(
        config=config.model_dump(exclude={"sweep", "output", "workers"}),
        seed=params.seed,
        mode="protocol" if config.pin_theta is None else "pinned-diagnostic",
        sweep_variable=sweep_variable,
        sweep_value=sweep_value,
        estimate=est.value,
        ci_low=est.ci_low,
        ci_high=est.ci_high,
        successes=total.passes,
        trials=config.trials,
        counted=total.counted,
        bit_error_rate=total.bit_errors / total.bits_read if total.bits_read else None,
        wall_time=time.perf_counter() - start,
        **refs,
    )


def run(config: ExperimentConfig):
    """Run one config. Returns a TrialReport, or a list of them for a sweep."""
    if config.sweep is None:
        return run_point(config)
    var = config.sweep.variable
    return [run_point(pt, i, var, v) for i, (pt, v) in enumerate(zip(config.points(), config.sweep.values))]


def decay_fit(reports, x: str = "sweep_value"):
    """Least-squares fit of log(estimate) against the sweep value.

    Returns ``(slope, intercept, r_squared)``. Points with a nonpositive
    estimate are dropped with a warning.
    """
    xs, ys = [], []
    for r in reports:
        est = r.estimate if isinstance(r, TrialReport) else r[1]
        xv = getattr(r, x) if isinstance(r, TrialReport) else r[0]
        if not est > 0:
            warnings.warn(f"dropping point {xv!r} with nonpositive estimate {est!r}")
            continue
        xs.append(float(xv))
        ys.append(math.log(est))
    if len(xs) < 4:
        raise ValueError(f"decay fit needs at least 4 positive points, got {len(xs)}")
    fit = sps.linregress(xs, ys)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


CSV_COLUMNS = ("sweep_variable", "sweep_value", "estimate", "ci_low", "ci_high", "analytic_ref", "bit_error_rate")


def format_reports(reports, fmt: str = "json") -> str:
    reports = reports if isinstance(reports, list) else [reports]
    if fmt == "json":
        return "".join(json.dumps(r.to_dict()) + "\n" for r in reports)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            d = r.to_dict()
            w.writerow(["" if d[c] is None else d[c] for c in CSV_COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def write_reports(reports, path, fmt: str = "json") -> None:
    Path(path).write_text(format_reports(reports, fmt))
