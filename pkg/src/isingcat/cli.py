"""Command line entry point.

    isingcat spectrum --config run.json
    isingcat steady --mode driven-perturbative --config run.json --out result.json
    isingcat sweep --config sweep.json --threads 4

Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import subprocess
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analysis, checks, config, oracle, solver
from .bath import coupling_channels, gamma_block
from .chain import build_eigenstructure, to_string
from .partition import build_partition

log = logging.getLogger("isingcat")

COMMANDS = ("spectrum", "partition", "steady", "evolve", "bloch-check",
            "dfs-check", "no-cat-check", "sweep")
SOLVER_ERRORS = (solver.NoNullVector, solver.DegenerateNullspace,
                 solver.NegativePopulation, oracle.NoConvergence,
                 oracle.PositivityLoss, np.linalg.LinAlgError)


class SolverFailure(RuntimeError):
    pass


def version() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=here, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# JSON helpers

def to_json(x):
    """Complex numbers become [re, im]; arrays become nested lists."""
    if isinstance(x, dict):
        return {str(k): to_json(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_json(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_json(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def matrix_pairs(m: np.ndarray) -> list:
    """Row-major list of [re, im] pairs."""
    m = np.asarray(m, complex)
    return [[float(v.real), float(v.imag)] for v in m.ravel()]


# ---------------------------------------------------------------------------
# pipelines; each returns a dict that becomes the "result" section

def run_spectrum(cfg: config.RunConfig) -> dict:
    es = build_eigenstructure(cfg.chain)
    n2 = cfg.chain.n_sites
    levels = []
    for i, lv in enumerate(es.levels):
        levels.append({"index": i, "energy": lv.energy, "degeneracy": len(lv.configs),
                       "configs": [to_string(c, n2) for c in lv.configs],
                       "parities": list(lv.parities)})
    return {"levels": levels,
            "metrics": {"energies": [lv.energy for lv in es.levels],
                        "ground_energy": cfg.chain.ground_energy}}


def _partition(cfg: config.RunConfig):
    es = build_eigenstructure(cfg.chain)
    return es, build_partition(es, cfg.bath.temperature, seed=cfg.seed or 12345)


def run_partition(cfg: config.RunConfig) -> dict:
    _, part = _partition(cfg)
    offsets = np.zeros(part.dim, dtype=int)
    seen = {}
    for k, lv in enumerate(part.level):
        offsets[k] = seen.get(lv, 0)
        seen[lv] = offsets[k] + 1
    sets = []
    for q, s in enumerate(part.sets):
        members = [[int(part.level[k]), int(part.parity[k]), int(offsets[k])] for k in s]
        sets.append({"pi": int(part.pi_label[q]), "size": len(s), "members": members,
                     "z_q": float(part.z_q[q])})
    return {"sets": sets, "metrics": {"n_sets": part.n_sets,
                                      "sizes": [len(s) for s in part.sets]}}


def _state_section(rho: np.ndarray, named: dict) -> dict:
    keep = {k: named[k] for k in ("scs-", "scs+", "up", "down")}
    return {"rho": matrix_pairs(rho), "dim": int(rho.shape[0]),
            "metrics": analysis.state_metrics(rho, keep)}


def run_steady(cfg: config.RunConfig) -> dict:
    es, part = _partition(cfg)
    mode = cfg.mode
    P = int(cfg.solver.get("P", 1))
    if mode == "uniform":
        fam = solver.solve_uniform(part, cfg.coupling, cfg.bath)
        w = part.z_q / part.z_q.sum()
        rho = fam.state(w)
        out = _state_section(rho, es.named)
        out.update({"nullity": fam.nullity, "residuals": fam.residuals,
                    "sector_populations": w})
        out["metrics"]["nullity"] = fam.nullity
        return out
    if mode == "thermal":
        rt = gamma_block(es, cfg.coupling, cfg.bath, p=0, omega=0.0)
        dps = cfg.solver.get("dps")
        chans = coupling_channels(es, cfg.coupling, cfg.bath) if dps else None
        rho = solver.solve_thermal(rt, es, cfg.bath.temperature, dps=dps, channels=chans)
        out = _state_section(rho, es.named)
        out["metrics"]["distance_to_gibbs"] = analysis.trace_distance(
            rho, solver.gibbs_state(es, cfg.bath.temperature))
        return out
    if mode == "two-bath":
        rates, sh = solver.solve_two_bath(part, cfg.coupling, cfg.bath, cfg.bath2)
        out = _state_section(sh.steady, es.named)
        out.update({"sector_populations": sh.sector_populations, "r": rates.r})
        return out
    blocks = solver.build_blocks(part, cfg.coupling, cfg.bath, P=P)
    if mode == "driven-direct":
        dps = cfg.solver.get("dps")
        sh = solver.solve_driven_direct(blocks, dps=dps)
        out = _state_section(sh.steady, es.named)
        out["diagnostics"] = sh.diagnostics
    else:
        rates, sh = solver.solve_driven_perturbative(blocks, part)
        out = _state_section(sh.steady, es.named)
        i_plus = part.set_of("scs+")
        i_minus = part.set_of("scs-")
        pops = sh.sector_populations
        out.update({"sector_populations": pops, "r": rates.r,
                    "r_explicit": rates.explicit, "scalar_r": rates.scalar_r,
                    "imag_residual": rates.imag_residual})
        out["metrics"]["p_plus_over_p_minus"] = float(pops[i_plus] / pops[i_minus])
        out["metrics"]["exp_minus_omega_over_T"] = float(
            np.exp(-blocks.omega / cfg.bath.temperature))
    out["metrics"]["freezeout"] = solver.low_t_freezeout_report(
        sh, es, cfg.bath.temperature)
    out["harmonics"] = {str(p): matrix_pairs(sh.u(p)) for p in sh.harmonics}
    return out


def _initial_state(name: str, es) -> np.ndarray:
    if name == "mixed":
        return np.eye(es.spec.dim) / es.spec.dim
    v = es.named[name]
    return np.outer(v, v.conj())


def run_evolve(cfg: config.RunConfig, csv_path: Path | None) -> dict:
    es, part = _partition(cfg)
    oc = cfg.oracle
    gen = oracle.redfield_superoperator(part, cfg.coupling, cfg.bath, cfg.bath2)
    if gen.omega:
        period = 2 * np.pi / gen.omega
    else:
        period = float(oc.get("period", 10.0))
    job = oracle.EvolutionJob(
        _initial_state(oc.get("initial", "mixed"), es),
        t_step=period / int(oc.get("steps_per_period", 100)), period=period,
        max_periods=int(oc.get("max_periods", 10 ** 6)),
        convergence_tol=float(oc.get("tol", 1e-7)),
        rtol=float(oc.get("rtol", 1e-8)), atol=float(oc.get("atol", 1e-10)))
    rho, hist, info = oracle.integrate(job, part, gen)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "distance_to_final", "fidelity_scs_minus",
                         "fidelity_scs_plus", "pi", "purity"])
            for r in hist:
                wr.writerow([r["t"], r["distance_to_final"], r["fidelity_scs-"],
                             r["fidelity_scs+"], r["parity"], r["purity"]])
    out = _state_section(rho, es.named)
    out["info"] = {k: v for k, v in info.items() if k != "stroboscopic"}
    out["metrics"]["periods"] = info["periods"]
    if cfg.mode == "thermal" or not cfg.coupling.eps_drive:
        out["metrics"]["distance_to_gibbs"] = analysis.trace_distance(
            rho, solver.gibbs_state(es, cfg.bath.temperature))
    return out


def run_bloch(cfg: config.RunConfig) -> dict:
    b = cfg.raw.get("bloch", {})
    h = float(b.get("h", cfg.chain.fields_h[-1]))
    grid = oracle.bloch_grid(h, b.get("eps_f", [0.002, 0.01, 0.05]),
                             b.get("gamma", [0.005, 0.02, 0.08]),
                             float(b.get("theta", 0.0)))
    worst = max(g["difference"] for g in grid)
    return {"grid": grid, "metrics": {"max_difference": worst, "agree_1e-6": worst < 1e-6}}


def run_dfs(cfg: config.RunConfig) -> dict:
    found = checks.dfs_scan(cfg.chain)
    states = [{"vector": f.vector, "energy": f.energy, "sx_eigenvalue": f.sx_eigenvalue,
               "h_residual": f.h_residual, "sx_residual": f.sx_residual} for f in found]
    rng = np.random.default_rng(cfg.seed)
    n_random = int(cfg.raw.get("dfs", {}).get("random_specs", 20))
    rand = []
    for i in range(n_random):
        spec = checks.random_generic_spec(2 + i % 2, rng, cfg.chain.coupling_j)
        rand.append({"n_half": spec.n_half, "h": list(spec.fields_h),
                     "found": len(checks.dfs_scan(spec))})
    return {"states": states, "random_specs": rand,
            "metrics": {"n_found": len(found),
                        "random_specs_empty": sum(r["found"] == 0 for r in rand),
                        "seed": cfg.seed}}


def run_no_cat(cfg: config.RunConfig) -> dict:
    nc = cfg.raw.get("no_cat", {})
    rep = checks.no_cat_trials(int(nc.get("trials", 100)), int(nc.get("n_sites", 4)),
                               seed=cfg.seed or checks.DEFAULT_SEED)
    ising = checks.no_thermal_cat_property(checks.ising_local_hamiltonian(cfg.chain))
    return {"random": rep, "chain": ising, "metrics": {
        "strict_inequality_count": rep["strict_inequality_count"],
        "trials": rep["trials"], "chain_identity_error": ising["identity_error"]}}


def _sweep_point(raw: dict, mode: str) -> dict:
    cfg = config.parse(raw, mode)
    t0 = time.perf_counter()
    res = run_steady(cfg)
    return {"metrics": res["metrics"], "seconds": time.perf_counter() - t0}


def run_sweep(cfg: config.RunConfig, threads: int) -> dict:
    if cfg.sweep is None:
        raise config.ConfigError("sweep command needs a 'sweep' section")
    path, values = cfg.sweep["parameter"], list(cfg.sweep["values"])
    raws = [config.set_path(cfg.raw, path, v) for v in values]
    for r in raws:
        config.parse(r)         # validate every point before any run
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        points = list(pool.map(lambda r: _sweep_point(r, cfg.mode), raws))
    rows = [{"value": v, **p} for v, p in zip(values, points)]
    col = {}
    key = "p_plus_over_p_minus"
    if all(key in p["metrics"] for p in points):
        col[key] = [p["metrics"][key] for p in points]
    return {"parameter": path, "points": rows, "metrics": col}


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isingcat", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--preset", choices=sorted(config.PRESETS),
                    help="use a built-in configuration instead of --config")
    ap.add_argument("--mode", choices=config.MODES)
    ap.add_argument("--out", help="result JSON path (stdout if omitted)")
    ap.add_argument("--csv", help="history CSV path for evolve")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _load(args) -> config.RunConfig:
    if args.config:
        cfg = config.load(args.config, args.mode)
    elif args.preset:
        cfg = config.parse(config.preset(args.preset), args.mode)
    elif args.command in ("bloch-check", "no-cat-check"):
        cfg = config.parse({"chain": dict(config.FIG2_CHAIN), "bath": {"T": 0.1},
                            "coupling": {"e": 0.1}}, args.mode)
    else:
        raise config.ConfigError("--config or --preset is required")
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw["seed"] = args.seed
    return cfg


def dispatch(cfg: config.RunConfig, command: str, args) -> dict:
    if command == "spectrum":
        return run_spectrum(cfg)
    if command == "partition":
        return run_partition(cfg)
    if command == "steady":
        return run_steady(cfg)
    if command == "evolve":
        csv_path = Path(args.csv) if args.csv else (
            Path(args.out).with_suffix(".csv") if args.out else None)
        return run_evolve(cfg, csv_path)
    if command == "bloch-check":
        return run_bloch(cfg)
    if command == "dfs-check":
        return run_dfs(cfg)
    if command == "no-cat-check":
        return run_no_cat(cfg)
    return run_sweep(cfg, args.threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    t0 = time.perf_counter()
    try:
        cfg = _load(args)
        result = dispatch(cfg, args.command, args)
    except config.ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    doc = {"command": args.command, "mode": cfg.mode, "version": version(),
           "inputs": cfg.raw, "metrics": result.pop("metrics", {}), "result": result,
           "timings": {"wall_seconds": time.perf_counter() - t0}}
    text = json.dumps(to_json(doc), indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
