"""
Command-line front end.

    ancsim --config reference_variance.yaml [--mode MODE] [--seed N] [--trials N]
           [--out PATH] [--workers N]

Results go to ``--out`` (or ``output.path`` in the config, or stdout) as
CSV; logs go to stderr.
"""

import argparse
import csv
import io
import logging
import sys

import numpy as np

from . import __version__
from .anc_core import noise_variance, variance_statistic
from .config import MODES, load_config
from .errors import AncError
from .outage import block_rng, estimate_outage, residual_variance_oracle, sample_ensemble
from .channel import sample_channels
from .power import amplification_factor
from .topology import build_symmetric_sweep

__all__ = ["VARIANCE_COLUMNS", "OUTAGE_COLUMNS", "ORACLE_COLUMNS", "run_variance_sweep",
           "run_outage_sweep", "run_oracle_check", "write_csv", "main"]

logger = logging.getLogger("ancsim")

VARIANCE_COLUMNS = ("sweep_index", "distance_ref", "rho", "statistic", "statistic_value",
                    "second_term", "third_term", "n_draws", "n_floored", "seed")
OUTAGE_COLUMNS = ("sweep_index", "distance_ref", "rho", "p_out", "ci_halfwidth",
                  "n_trials", "n_floored", "seed")
ORACLE_COLUMNS = ("realization", "seed", "closed_form", "empirical", "rel_error", "passed")


def run_variance_sweep(config):
    """
    One row per (sweep point, correlation). Every point reuses the same
    channel seed so curves for different correlations share their white noise.
    """
    alloc = config.allocation
    rows = []
    for idx, topo in enumerate(build_symmetric_sweep(config.sweep)):
        for label, spec in config.correlations:
            ens = sample_ensemble(spec, config.n_draws, config.seed, config.block_size)
            out = variance_statistic(ens, topo, alloc, config.noise, config.statistic,
                                     dest=config.dest, return_terms=True)
            rows.append({"sweep_index": idx, "distance_ref": topo.reference_distance,
                         "rho": label, "statistic": config.statistic,
                         "statistic_value": out["value"], "second_term": out["second_term"],
                         "third_term": out["third_term"], "n_draws": config.n_draws,
                         "n_floored": out["n_floored"], "seed": config.seed})
            logger.info("variance point %d rho=%s: %.6g", idx, label, out["value"])
    return rows


def run_outage_sweep(config):
    alloc = config.allocation
    rows = []
    for idx, topo in enumerate(build_symmetric_sweep(config.sweep)):
        for label, spec in config.correlations:
            res = estimate_outage(topo, alloc, spec, config.noise, config.beta, config.n_trials,
                                  config.seed, dest=config.dest, workers=config.workers,
                                  block_size=config.block_size)
            rows.append({"sweep_index": idx, "distance_ref": topo.reference_distance,
                         "rho": label, "p_out": res.p_out, "ci_halfwidth": res.ci_halfwidth,
                         "n_trials": res.n_trials, "n_floored": res.n_floored,
                         "seed": res.seed})
            logger.info("outage point %d rho=%s: %.6g +- %.2g", idx, label, res.p_out,
                        res.ci_halfwidth)
    return rows


def _rel_error(closed, empirical):
    if closed == 0:
        return 0.0 if empirical == 0 else np.inf
    return abs(empirical - closed) / closed


def run_oracle_check(config, variance_fn=noise_variance):
    """
    Compare the closed-form residual variance with the brute-force estimate
    on random realizations at the first sweep point and correlation.

    Realization ``r`` draws its channels from block ``r`` of the config seed
    and its noise from seed ``(seed, r)``. Returns ``(rows, ok)``; failing
    realizations are logged with everything needed to replay them.
    """
    topo = build_symmetric_sweep(config.sweep)[0]
    alloc = config.allocation
    label, spec = config.correlations[0]
    rows, ok = [], True
    for r in range(config.oracle_realizations):
        h = sample_channels(spec, block_rng(config.seed, r))
        a_f = amplification_factor(alloc, topo, h, config.noise.relay)
        closed = float(variance_fn(config.dest, topo, alloc, h, a_f, config.noise))
        noise_seed = [config.seed, r]
        emp = residual_variance_oracle(config.dest, None, topo, alloc, h, config.noise,
                                       config.oracle_noise_draws, noise_seed)
        err = _rel_error(closed, emp)
        passed = bool(err <= config.oracle_tolerance)
        if not passed:
            ok = False
            logger.error("oracle mismatch at realization %d (seed=%d, rho=%s): closed=%r "
                         "empirical=%r rel_error=%.4g\n  h_source_dest=%r\n  h_source_relay=%r"
                         "\n  h_relay_dest=%r", r, config.seed, label, closed, emp, err,
                         h.h_source_dest.tolist(), h.h_source_relay.tolist(),
                         h.h_relay_dest.tolist())
        rows.append({"realization": r, "seed": config.seed, "closed_form": closed,
                     "empirical": emp, "rel_error": err, "passed": passed})
    return rows, ok


def write_csv(rows, columns, stream):
    """RFC 4180 CSV with a fixed header and ``\\r\\n`` line endings."""
    writer = csv.DictWriter(stream, fieldnames=columns, lineterminator="\r\n",
                            quoting=csv.QUOTE_MINIMAL)
    writer.writeheader()
    for row in rows:
        writer.writerow({c: _fmt(row[c]) for c in columns})


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="ancsim", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", required=True, help="experiment YAML file")
    p.add_argument("--mode", choices=MODES, help="override the config's mode")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--trials", type=int, help="override the trial/draw count")
    p.add_argument("--out", help="CSV output path (default: config output.path or stdout)")
    p.add_argument("--workers", type=int, help="worker processes for outage sweeps")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = load_config(args.config)
        if args.seed is not None and args.seed < 0:
            raise AncError("--seed must be non-negative")
        if args.trials is not None and args.trials < 1:
            raise AncError("--trials must be >= 1")
        if args.workers is not None and args.workers < 1:
            raise AncError("--workers must be >= 1")
        config = config.with_overrides(mode=args.mode, seed=args.seed, n_trials=args.trials,
                                       n_draws=args.trials, workers=args.workers)
    except AncError as exc:
        logger.error("%s", exc)
        return 2

    status = 0
    if config.mode == "variance_sweep":
        rows, columns = run_variance_sweep(config), VARIANCE_COLUMNS
    elif config.mode == "outage_sweep":
        rows, columns = run_outage_sweep(config), OUTAGE_COLUMNS
    else:
        rows, ok = run_oracle_check(config)
        columns = ORACLE_COLUMNS
        status = 0 if ok else 1

    out = args.out or config.output
    if out:
        with open(out, "w", newline="") as fh:
            write_csv(rows, columns, fh)
    else:
        buf = io.StringIO(newline="")
        write_csv(rows, columns, buf)
        sys.stdout.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())
