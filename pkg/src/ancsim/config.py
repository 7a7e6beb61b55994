"""
Experiment configuration files (YAML, ``schema_version: 1``).

Every value is validated on load. Errors name the offending field and,
when the file is available, the line it came from::

    reference_variance.yaml:18: power.psi: sum(psi) = 1.2 exceeds 1
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .anc_core import parse_statistic
from .channel import CorrelationSpec, uniform_gamma
from .errors import AncError, ConfigError
from .power import NoisePowers, allocate, thermal_noise_power
from .topology import SweepConfig

__all__ = ["ExperimentConfig", "load_config", "parse_config", "MODES", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
MODES = ("variance_sweep", "outage_sweep", "oracle_check")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    sweep: SweepConfig
    p_total: float
    psi: np.ndarray
    noise: NoisePowers
    correlations: list          # [(label, CorrelationSpec)], label is rho or "custom"
    beta_db: float = 0.0
    n_trials: int = 100_000
    seed: int = 1
    dest: int = 0
    statistic: str = "median"
    n_draws: int = 100_000
    oracle_realizations: int = 20
    oracle_noise_draws: int = 1_000_000
    oracle_tolerance: float = 0.02
    output: str = None
    workers: int = 1
    block_size: int = 1 << 14
    source: str = field(default=None, compare=False)

    @property
    def num_pairs(self):
        return self.sweep.num_pairs

    @property
    def beta(self):
        """Outage threshold in linear units."""
        return 10.0 ** (self.beta_db / 10.0)

    @property
    def allocation(self):
        return allocate(self.p_total, self.psi)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "mode" in kw and kw["mode"] not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        return replace(self, **kw)


class _Lines:
    """Map dotted field paths to 1-based source lines."""

    def __init__(self, text):
        self.lines = {}
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError:
            node = None
        if node is not None:
            self._walk(node, "")

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                sub = f"{path}.{k.value}" if path else str(k.value)
                self.lines[sub] = k.start_mark.line + 1
                self._walk(v, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, f"{path}[{i}]")

    def get(self, path):
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path.rpartition(".")[0]
        return None


class _Reader:
    def __init__(self, data, lines, source):
        self.data = data
        self.lines = lines
        self.source = source

    def fail(self, path, msg):
        where = self.source or "<config>"
        line = self.lines.get(path) if self.lines else None
        if line is not None:
            where = f"{where}:{line}"
        raise ConfigError(f"{where}: {path}: {msg}")

    def get(self, path, default=KeyError):
        cur = self.data
        for part in path.split("."):
            if not isinstance(cur, dict) or part not in cur:
                if default is KeyError:
                    self.fail(path, "required field is missing")
                return default
            cur = cur[part]
        return cur

    def number(self, path, default=KeyError, kind=float, lo=None, hi=None, lo_open=False):
        v = self.get(path, default)
        if v is default and default is not KeyError:
            return v
        try:
            if kind is int and (isinstance(v, bool) or float(v) != int(v)):
                raise ValueError
            v = kind(v)
        except (TypeError, ValueError):
            self.fail(path, f"expected {'an integer' if kind is int else 'a number'}, got {v!r}")
        if lo is not None and (v <= lo if lo_open else v < lo):
            self.fail(path, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
        if hi is not None and v > hi:
            self.fail(path, f"must be <= {hi}, got {v}")
        return v

    def guarded(self, path, fn, *args):
        try:
            return fn(*args)
        except AncError as exc:
            self.fail(path, str(exc))


def _vector(r, path, value):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        r.fail(path, f"expected a number or list of numbers, got {value!r}")
    if not np.all(np.isfinite(arr)):
        r.fail(path, "values must be finite")
    return arr


def _topology(r, k):
    alpha = r.number("topology.alpha", 4.0, lo=2.0)
    names = ("d_direct", "d_cross", "d_source_relay", "d_relay_dest")
    if r.get("topology.sweep", None) is not None:
        steps = r.number("topology.sweep.steps", 1, kind=int, lo=1)
        ranges = {}
        for n in names:
            p = f"topology.sweep.{n}"
            v = _vector(r, p, r.get(p))
            if v.size not in (1, 2):
                r.fail(p, "expected a scalar or a [lo, hi] pair")
            if np.any(v <= 0):
                r.fail(p, "distances must be strictly positive")
            ranges[n] = v
        return r.guarded("topology.sweep", SweepConfig.linear, steps, *ranges.values(), k, alpha)
    if r.get("topology.points", None) is not None:
        vecs = []
        for n in names:
            p = f"topology.points.{n}"
            v = np.atleast_1d(_vector(r, p, r.get(p)))
            if np.any(v <= 0):
                r.fail(p, "distances must be strictly positive")
            vecs.append(v)
        return r.guarded("topology.points", SweepConfig, *vecs, k, alpha)
    r.fail("topology", "needs either 'sweep' or 'points'")


def _noise(r, k):
    model = r.get("noise.model", "thermal")
    if model == "thermal":
        bw = r.number("noise.bandwidth_hz", 22e6, lo=0, lo_open=True)
        density = r.number("noise.density_dbm_hz", -174.0)
        nf = r.number("noise.noise_figure_db", 0.0)
        return NoisePowers.uniform(thermal_noise_power(bw, density, nf), k)
    if model == "fixed":
        dest = _vector(r, "noise.dest", r.get("noise.dest"))
        relay = r.number("noise.relay", lo=0.0)
        if dest.ndim == 0:
            dest = np.full(k, float(dest))
        if dest.shape != (k,):
            r.fail("noise.dest", f"expected a scalar or {k} values")
        if np.any(dest < 0):
            r.fail("noise.dest", "noise powers must be non-negative")
        return NoisePowers(dest, relay)
    r.fail("noise.model", f"must be 'thermal' or 'fixed', got {model!r}")


def _correlations(r, k):
    if r.get("correlation.rho", None) is not None:
        rhos = np.atleast_1d(_vector(r, "correlation.rho", r.get("correlation.rho")))
        if rhos.ndim != 1 or rhos.size == 0:
            r.fail("correlation.rho", "expected a scalar or a non-empty list")
        return [(float(x), r.guarded("correlation.rho", uniform_gamma, float(x), k)) for x in rhos]
    if r.get("correlation.gamma", None) is not None:
        raw = r.get("correlation.gamma")
        if not isinstance(raw, dict):
            r.fail("correlation.gamma", "expected a mapping 'i,j' -> 3x3 matrix (1-based)")
        gamma = {}
        for key, mat in raw.items():
            p = f"correlation.gamma.{key}"
            try:
                i, j = (int(x) - 1 for x in str(key).split(","))
            except ValueError:
                r.fail(p, "keys look like '2,1' (source, destination; 1-based)")
            gamma[(i, j)] = _vector(r, p, mat)
        return [("custom", r.guarded("correlation.gamma", CorrelationSpec, k, gamma))]
    r.fail("correlation", "needs either 'rho' or 'gamma'")


def parse_config(data, source=None, text=None):
    """Build an :class:`ExperimentConfig` from an already-parsed mapping."""
    lines = _Lines(text) if text is not None else None
    r = _Reader(data, lines, source)
    if not isinstance(data, dict):
        r.fail("", "top level must be a mapping")
    version = r.number("schema_version", kind=int)
    if version != SCHEMA_VERSION:
        r.fail("schema_version", f"unsupported schema version {version}; expected {SCHEMA_VERSION}")
    mode = r.get("mode", "variance_sweep")
    if mode not in MODES:
        r.fail("mode", f"must be one of {', '.join(MODES)}")
    k = r.number("topology.num_pairs", 2, kind=int, lo=1)
    sweep = _topology(r, k)

    p_total = r.number("power.p_total", lo=0, lo_open=True)
    psi = np.atleast_1d(_vector(r, "power.psi", r.get("power.psi")))
    if psi.size == 1:
        psi = np.full(k, psi[0])
    if psi.shape != (k,):
        r.fail("power.psi", f"expected a scalar or {k} values")
    r.guarded("power.psi", allocate, p_total, psi)

    noise = _noise(r, k)
    correlations = _correlations(r, k)

    dest = r.number("variance.dest", 1, kind=int, lo=1, hi=k) - 1
    statistic = str(r.get("variance.statistic", "median"))
    r.guarded("variance.statistic", parse_statistic, statistic)

    # master seed; ``outage.seed`` is accepted for outage-only files
    if r.get("seed", None) is not None:
        seed = r.number("seed", kind=int, lo=0)
    else:
        seed = r.number("outage.seed", 1, kind=int, lo=0)

    return ExperimentConfig(
        mode=mode, sweep=sweep, p_total=p_total, psi=psi, noise=noise,
        correlations=correlations,
        beta_db=r.number("outage.beta_db", 0.0),
        n_trials=r.number("outage.n_trials", 100_000, kind=int, lo=1),
        seed=seed,
        dest=dest, statistic=statistic,
        n_draws=r.number("variance.n_draws", 100_000, kind=int, lo=1),
        oracle_realizations=r.number("oracle.n_realizations", 20, kind=int, lo=1),
        oracle_noise_draws=r.number("oracle.n_noise_draws", 1_000_000, kind=int, lo=2),
        oracle_tolerance=r.number("oracle.tolerance", 0.02, lo=0, lo_open=True),
        output=r.get("output.path", None),
        workers=r.number("run.workers", 1, kind=int, lo=1),
        block_size=r.number("run.block_size", 1 << 14, kind=int, lo=1),
        source=source,
    )


def load_config(path):
    path = Path(path)
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    return parse_config(data, source=str(path), text=text)
