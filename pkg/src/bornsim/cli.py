"""Reproducible experiment driver.

``simulate --config cfg.json [--seed N] [--out DIR] [--set key=value ...]``
parses a JSON config, dispatches to the experiment runners, and writes every
output file plus a manifest with checksums.  Identical (config, seed) pairs
reproduce identical checksums regardless of SIM_THREADS.
"""

from __future__ import annotations

import argparse
import copy
import datetime
import hashlib
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, classical, discrete, lindblad, models, phasespace, unravel
from .potentials import PotentialSpec

EXPERIMENTS = (
    "master",
    "born",
    "qsd",
    "ticker_tape",
    "kicked_rotor",
    "langevin",
    "bridge",
    "scales",
)


class ConfigError(ValueError):
    pass


class NumericalContractError(RuntimeError):
    pass


_POTENTIAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"enum": ["free", "harmonic", "double_well", "cosine"]},
        "params": {"type": "object"},
    },
    "required": ["name"],
}

_MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "type": {
            "enum": [
                "dephasing",
                "damping",
                "random",
                "qbm",
                "measurement",
                "kicked_rotor",
                "langevin",
                "scales",
            ]
        },
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "dim": {"type": "integer", "minimum": 2},
        "n_lindblads": {"type": "integer", "minimum": 1},
        "model_seed": {"type": "integer"},
        "m": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "kT": {"type": "number", "exclusiveMinimum": 0},
        "kB": {"type": "number", "exclusiveMinimum": 0},
        "hbar": {"type": "number", "exclusiveMinimum": 0},
        "potential": _POTENTIAL_SCHEMA,
        "grid_n": {"type": "integer", "minimum": 16},
        "grid_length": {"type": "number", "exclusiveMinimum": 0},
        "c1sq": {"type": "number", "minimum": 0, "maximum": 1},
        "kick_strength": {"type": "number"},
        "inertia": {"type": "number", "exclusiveMinimum": 0},
        "kick_period": {"type": "number", "exclusiveMinimum": 0},
        "lam": {"type": "number", "exclusiveMinimum": 0},
        "action": {"type": "number", "exclusiveMinimum": 0},
        "x0": {"type": "number"},
        "p0": {"type": "number"},
        "theta0": {"type": "number"},
        "l0": {"type": "number"},
        "width_factor": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["type"],
}

_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "model": _MODEL_SCHEMA,
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_final": {"type": "number", "exclusiveMinimum": 0},
                "n_steps": {"type": "integer", "minimum": 1},
                "n_traj": {"type": "integer", "minimum": 1},
                "n_samples": {"type": "integer", "minimum": 1},
                "record_every": {"type": "integer", "minimum": 1},
                "n_periods": {"type": "integer", "minimum": 1},
                "compare_master": {"type": "boolean"},
                "fit_t_min": {"type": "number", "minimum": 0},
                "trace_drift_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "dump_times": {"type": "array", "items": {"type": "number"}},
                "max_trajectory_files": {"type": "integer", "minimum": 0},
            },
        },
    },
    "required": ["experiment", "model"],
}

_DEFAULTS = {
    "numerics": {
        "dt": 1e-3,
        "t_final": 1.0,
        "n_steps": 4,
        "n_traj": 100,
        "n_samples": 1000,
        "record_every": 10,
        "n_periods": 6,
        "compare_master": False,
        "trace_drift_tol": 1e-8,
    },
    "seed": 0,
    "output": {"directory": "out", "dump_times": [], "max_trajectory_files": 3},
    "model_defaults": {"hbar": 1.0, "kB": 1.0},
}


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def parse_config(source) -> dict:
    """Load, validate, and fill defaults.  ``source`` is a path or a dict."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}") from e
    else:
        raw = copy.deepcopy(source)
    validator = jsonschema.Draft202012Validator(_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        dotted = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config key {dotted}: {e.message}")
    cfg = copy.deepcopy(raw)
    num = dict(_DEFAULTS["numerics"])
    num.update(cfg.get("numerics", {}))
    cfg["numerics"] = num
    out = copy.deepcopy(_DEFAULTS["output"])
    out.update(cfg.get("output", {}))
    cfg["output"] = out
    cfg.setdefault("seed", _DEFAULTS["seed"])
    model = cfg["model"]
    if model["type"] in ("dephasing", "damping", "random", "qbm", "kicked_rotor"):
        model.setdefault("hbar", _DEFAULTS["model_defaults"]["hbar"])
    if model["type"] == "qbm":
        model.setdefault("kB", _DEFAULTS["model_defaults"]["kB"])
    return cfg


def serialize_config(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, indent=2)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def apply_overrides(cfg_raw: dict, pairs: list[str]) -> dict:
    out = copy.deepcopy(cfg_raw)
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = parsed
    return out


# ---------------------------------------------------------------------------
# model construction


def _potential_from_block(block: dict | None) -> PotentialSpec:
    if block is None:
        return PotentialSpec("free")
    return PotentialSpec(block["name"], block.get("params", {}))


def build_model(model_cfg: dict):
    """Return (LindbladModel, obs_x, obs_p, psi0, extras) for master/born/qsd."""
    mtype = model_cfg["type"]
    hbar = model_cfg.get("hbar", 1.0)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    if mtype == "dephasing":
        g = model_cfg["gamma"]
        a = np.sqrt(g) * sz
        model = lindblad.LindbladModel(H=np.zeros((2, 2)), lindblads=[a], hbar=hbar)
        psi0 = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
        return model, sx, sz, psi0, {}
    if mtype == "damping":
        g = model_cfg["gamma"]
        sminus = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |g><e|, e = index 0
        a = np.sqrt(g) * sminus
        model = lindblad.LindbladModel(H=np.zeros((2, 2)), lindblads=[a], hbar=hbar)
        psi0 = np.array([1.0, 0.0], dtype=complex)
        return model, sx, sz, psi0, {}
    if mtype == "random":
        dim = model_cfg.get("dim", 8)
        n_lind = model_cfg.get("n_lindblads", 2)
        rng = np.random.default_rng(model_cfg.get("model_seed", 7))
        h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = 0.5 * (h + h.conj().T) / np.sqrt(dim)
        ls = []
        for _ in range(n_lind):
            a = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(
                2.0 * dim
            )
            ls.append(a)
        model = lindblad.LindbladModel(H=h, lindblads=ls, hbar=hbar)
        psi0 = np.zeros(dim, dtype=complex)
        psi0[0] = 1.0
        ox = np.diag(np.arange(dim).astype(float)).astype(complex)
        op = (np.eye(dim, k=1) + np.eye(dim, k=-1)).astype(complex)
        return model, ox, op, psi0, {}
    if mtype == "qbm":
        params = lindblad.QBMParams(
            m=model_cfg["m"],
            T=model_cfg.get("T", model_cfg.get("kT", 1.0) / model_cfg.get("kB", 1.0)),
            gamma=model_cfg["gamma"],
            kB=model_cfg.get("kB", 1.0),
            potential=_potential_from_block(model_cfg.get("potential")),
        )
        rep = lindblad.GridRep(
            n=model_cfg.get("grid_n", 128),
            length=model_cfg.get("grid_length", 40.0),
            hbar=hbar,
        )
        qbm = lindblad.build_qbm(params, rep)
        width = model_cfg.get("width_factor", 1.0)
        x0 = model_cfg.get("x0", 0.0)
        p0 = model_cfg.get("p0", 0.0)
        if width == 1.0:
            psi0 = lindblad.matched_coherent_state(qbm, x0, p0)
        else:
            var_x = width**2 * hbar**2 / (8.0 * params.m * params.kT)
            psi0 = np.exp(
                -((rep.x - x0) ** 2) / (4.0 * var_x) + 1j * p0 * rep.x / hbar
            ).astype(complex)
            psi0 /= np.linalg.norm(psi0)
        return qbm.model, qbm.x, qbm.p, psi0, {"qbm": qbm}
    raise ConfigError(f"model type {mtype} is not a Lindblad model")


# ---------------------------------------------------------------------------
# output helpers


class OutputWriter:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.files.append(p)
        return p

    def write_csv(self, name: str, header: list[str], rows):
        p = self.path(name)
        with p.open("w") as f:
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(
                    ",".join(
                        _fmt(v) if isinstance(v, float) else str(v) for v in row
                    )
                    + "\n"
                )
        return p

    def write_json(self, name: str, obj):
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        return p

    def write_text(self, name: str, text: str):
        p = self.path(name)
        p.write_text(text)
        return p

    def checksums(self) -> list[dict]:
        out = []
        for p in self.files:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            out.append({"path": p.name, "sha256": digest})
        return out


def _moment_rows(sol: lindblad.MasterSolution, ox, op):
    ms = lindblad.moments_from_solution(sol, ox, op)
    for i, t in enumerate(ms.times):
        yield (
            float(t),
            float(ms.trace[i]),
            float(ms.purity[i]),
            float(ms.ex[i]),
            float(ms.ep[i]),
            float(ms.var_x[i]),
            float(ms.var_p[i]),
        )


# ---------------------------------------------------------------------------
# experiment runners


def _run_master(cfg, writer: OutputWriter):
    model, ox, op, psi0, _ = build_model(cfg["model"])
    num = cfg["numerics"]
    n_steps = int(round(num["t_final"] / num["dt"]))
    rho0 = np.outer(psi0, psi0.conj())
    sol = lindblad.integrate_master(
        model, rho0, num["dt"], n_steps, record_every=num["record_every"]
    )
    if sol.trace_drift > num["trace_drift_tol"]:
        raise NumericalContractError(
            f"trace drift {sol.trace_drift:.2e} exceeds {num['trace_drift_tol']:.1e}"
        )
    writer.write_csv(
        "master_moments.csv",
        ["t", "tr", "purity", "ex", "ep", "var_x", "var_p"],
        _moment_rows(sol, ox, op),
    )


def _run_ensemble(cfg, writer: OutputWriter, scheme: str):
    model, ox, op, psi0, _ = build_model(cfg["model"])
    num = cfg["numerics"]
    result = unravel.ensemble_run(
        model,
        psi0,
        scheme,
        n_traj=num["n_traj"],
        t_final=num["t_final"],
        dt=num["dt"],
        seed=cfg["seed"],
        obs_x=ox,
        obs_p=op,
        record_every=num["record_every"],
    )
    for k, rec in enumerate(result.records[: cfg["output"]["max_trajectory_files"]]):
        writer.write_csv(
            f"trajectory_{k:03d}.csv",
            ["step", "t", "jumped", "branch_index", "n_jumps_cum", "ex", "ep", "var_x", "var_p"],
            (
                (s, float(t), j, b, c, float(a), float(bb), float(vx), float(vp))
                for (s, t, j, b, c, a, bb, vx, vp) in rec.csv_rows(
                    num["record_every"], num["dt"]
                )
            ),
        )
    master_sol = None
    if num["compare_master"]:
        n_steps = int(round(num["t_final"] / num["dt"]))
        master_sol = lindblad.integrate_master(
            model,
            np.outer(psi0, psi0.conj()),
            num["dt"],
            n_steps,
            record_every=num["record_every"],
        )
    lines = []
    ex_all = np.array([r.ex for r in result.records])
    ep_all = np.array([r.ep for r in result.records])
    from .hilbert import trace_distance

    for i, t in enumerate(result.times):
        obj = {
            "t": float(t),
            "ex_mean": float(ex_all[:, i].mean()),
            "ex_var": float(ex_all[:, i].var()),
            "ep_mean": float(ep_all[:, i].mean()),
            "ep_var": float(ep_all[:, i].var()),
        }
        if master_sol is not None:
            obj["trace_distance_to_master"] = float(
                trace_distance(result.rho_avg[i], master_sol.rhos[i])
            )
        lines.append(json.dumps(obj, sort_keys=True))
    writer.write_text("ensemble_summary.ndjson", "\n".join(lines) + "\n")
    return result


def _run_ticker(cfg, writer: OutputWriter):
    model_cfg = cfg["model"]
    if model_cfg["type"] != "measurement":
        raise ConfigError("ticker_tape requires model.type = 'measurement'")
    c1sq = model_cfg.get("c1sq", 0.3)
    n_steps = cfg["numerics"]["n_steps"]
    steps = [discrete.measurement_interaction(c1sq) for _ in range(n_steps)]
    m0 = np.array([1.0, 0.0], dtype=complex)
    result = discrete.run_ticker_tape(m0, steps, cfg["seed"])
    writer.write_text("branch_tree.ndjson", discrete.tree_to_ndjson(result.tree))
    outcomes = discrete.sample_ticker_outcomes(
        m0, steps, cfg["numerics"]["n_samples"], cfg["seed"]
    )
    writer.write_csv(
        "ticker_outcomes.csv",
        [f"step_{i}" for i in range(n_steps)],
        (tuple(int(v) for v in row) for row in outcomes),
    )


def _run_kicked_rotor(cfg, writer: OutputWriter):
    mc = cfg["model"]
    params = models.KickedRotorParams(
        kick_strength=mc["kick_strength"],
        inertia=mc["inertia"],
        hbar=mc.get("hbar", 1.0),
        dim=mc.get("dim", 201),
        kick_period=mc.get("kick_period", 1.0),
    )
    num = cfg["numerics"]
    n_periods = num["n_periods"]
    theta0 = mc.get("theta0", 2.0)
    l0 = mc.get("l0", 0.0)
    sigma_theta = np.sqrt(0.5 / params.l_max)
    u = models.rotor_floquet(params)
    psi = phasespace.cylinder_coherent(theta0, l0, sigma_theta, params.dim)
    rng = np.random.default_rng(cfg["seed"])
    n_pts = num["n_samples"]
    sigma_m = 0.5 / sigma_theta
    pts = np.column_stack(
        [
            (rng.normal(theta0, sigma_theta, n_pts)) % (2.0 * np.pi),
            rng.normal(l0, sigma_m, n_pts) * params.kick_period / params.inertia,
        ]
    )
    grid = phasespace.PhaseGrid(
        geometry="cylinder",
        x_range=(0.0, 2.0 * np.pi),
        p_range=(-float(params.l_max), float(params.l_max)),
        nx=64,
        np_=81,
    )
    lines = []
    for step in range(n_periods + 1):
        field = phasespace.husimi_cylinder(psi, grid, sigma_theta, hbar=params.hbar)
        writer.write_csv(
            f"husimi_{step:03d}.csv",
            [f"p{j}" for j in range(grid.np_)],
            (tuple(float(v) for v in row) for row in field.values),
        )
        writer.write_json(
            f"husimi_{step:03d}.json",
            {
                "geometry": grid.geometry,
                "theta_range": list(grid.x_range),
                "l_range": list(grid.p_range),
                "nx": grid.nx,
                "np": grid.np_,
                "step": step,
            },
        )
        writer.write_csv(
            f"classical_{step:03d}.csv",
            ["theta", "p"],
            (tuple(float(v) for v in row) for row in pts),
        )
        qm = phasespace.field_moments(field, mass_floor=0.9)
        scale = params.inertia / params.kick_period  # map momentum to L units
        cm = phasespace.ensemble_moments(
            np.column_stack([pts[:, 0], pts[:, 1] * scale]), circular_x=True
        )
        lines.append(
            json.dumps(
                {
                    "step": step,
                    "leakage": models.boundary_leakage(psi),
                    "quantum": qm.__dict__,
                    "classical": cm.__dict__,
                },
                sort_keys=True,
            )
        )
        if step < n_periods:
            psi = u @ psi
            pts = models.classical_standard_map(pts, params.k_eff, 1)
    writer.write_text("rotor_moments.ndjson", "\n".join(lines) + "\n")


def _run_langevin(cfg, writer: OutputWriter):
    mc = cfg["model"]
    params = classical.LangevinParams(
        m=mc["m"],
        gamma=mc["gamma"],
        kT=mc.get("kT", 1.0),
        potential=_potential_from_block(mc.get("potential")),
        dt=cfg["numerics"]["dt"],
    )
    num = cfg["numerics"]
    ens = classical.thermal_ensemble(num["n_samples"], params, cfg["seed"])
    n_steps = int(round(num["t_final"] / num["dt"]))
    times, snaps = classical.langevin_run(
        ens, params, n_steps, cfg["seed"], record_every=num["record_every"]
    )
    writer.write_csv(
        "langevin_moments.csv",
        ["t", "mean_x", "mean_p", "var_x", "var_p"],
        (
            (
                float(t),
                float(s.x.mean()),
                float(s.p.mean()),
                float(s.x.var()),
                float(s.p.var()),
            )
            for t, s in zip(times, snaps)
        ),
    )
    final = snaps[-1]
    writer.write_csv(
        "langevin_final.csv",
        ["x", "p"],
        ((float(a), float(b)) for a, b in zip(final.x, final.p)),
    )


def bridge_initial_state(qbm, var_p0: float | None = None, pert_seed: int = 99) -> np.ndarray:
    """Momentum-squeezed Gaussian with a generic smooth asymmetric perturbation.

    The squeeze keeps the initial conditioned momentum width far below the
    thermal value, and the asymmetry seeds the one-lobe-wins collapse after
    each branching; an exactly symmetric packet sits on an unstable manifold
    where jumps never displace the centroid."""
    hbar = qbm.model.hbar
    mkt = qbm.params.m * qbm.params.kT
    if var_p0 is None:
        var_p0 = 0.02 * mkt
    var_x0 = hbar**2 / (4.0 * var_p0)
    x = np.real(np.diag(qbm.x))
    rng = np.random.default_rng(pert_seed)
    sigma = np.sqrt(var_x0)
    pert = sum(
        rng.normal(scale=0.05) * np.cos(k / sigma * x + rng.uniform(0.0, 2.0 * np.pi))
        for k in (0.8, 1.6, 2.6)
    )
    psi = np.exp(-(x**2) / (4.0 * var_x0)) * (1.0 + pert) * np.exp(
        1j * 0.2 * np.sin(1.2 * x / sigma)
    )
    psi = psi.astype(complex)
    return psi / np.linalg.norm(psi)


def _run_bridge(cfg, writer: OutputWriter):
    mc = cfg["model"]
    if mc["type"] != "qbm":
        raise ConfigError("bridge requires model.type = 'qbm'")
    model, ox, op, _, extras = build_model(mc)
    psi0 = bridge_initial_state(extras["qbm"])
    num = cfg["numerics"]
    result = unravel.ensemble_run(
        model,
        psi0,
        "born",
        n_traj=num["n_traj"],
        t_final=num["t_final"],
        dt=num["dt"],
        seed=cfg["seed"],
        obs_x=ox,
        obs_p=op,
        record_every=num["record_every"],
    )
    qbm = extras["qbm"]
    lparams = classical.LangevinParams(
        m=qbm.params.m,
        gamma=qbm.params.gamma,
        kT=qbm.params.kT,
        potential=qbm.params.potential,
        dt=num["dt"],
    )
    n_steps = int(round(num["t_final"] / num["dt"]))
    ens0 = classical.ClassicalEnsemble(
        x=np.zeros(num["n_samples"]), p=np.zeros(num["n_samples"])
    )
    times_c, snaps = classical.langevin_run(
        ens0, lparams, n_steps, cfg["seed"] + 1, record_every=num["record_every"]
    )
    centroid_p = np.array([r.ep for r in result.records])
    report = classical.moment_bridge(
        result.times, centroid_p, times_c, snaps, lparams,
        t_min=num.get("fit_t_min", num["t_final"] / 3.0),
    )
    writer.write_json(
        "bridge_report.json",
        {
            "slope_quantum": report.slope_quantum,
            "slope_classical": report.slope_classical,
            "slope_expected": report.slope_expected,
            "rel_slope_error": report.rel_slope_error,
            "passes": report.passes,
        },
    )


def _run_scales(cfg, writer: OutputWriter):
    mc = cfg["model"]
    lam = mc["lam"]
    out = {}
    if "action" in mc:
        out["ehrenfest_time"] = models.ehrenfest_time(
            lam, mc["action"], mc.get("hbar", 1.0)
        )
    if all(k in mc for k in ("m", "T", "gamma")):
        params = lindblad.QBMParams(
            m=mc["m"], T=mc["T"], gamma=mc["gamma"], kB=mc.get("kB", 1.0)
        )
        sc = models.localization_scales(params, lam, hbar=mc.get("hbar", 1.0))
        out["localization"] = {"ell": sc.ell, "tau": sc.tau, "rate": sc.rate}
    writer.write_json("scales.json", out)


def run(cfg: dict, out_dir: str | Path | None = None) -> dict:
    """Execute a parsed config; returns the manifest dict."""
    start = datetime.datetime.now(datetime.timezone.utc).isoformat()
    directory = Path(out_dir) if out_dir else Path(cfg["output"]["directory"])
    writer = OutputWriter(directory)
    exp = cfg["experiment"]
    if exp == "master":
        _run_master(cfg, writer)
    elif exp in ("born", "qsd"):
        _run_ensemble(cfg, writer, exp)
    elif exp == "ticker_tape":
        _run_ticker(cfg, writer)
    elif exp == "kicked_rotor":
        _run_kicked_rotor(cfg, writer)
    elif exp == "langevin":
        _run_langevin(cfg, writer)
    elif exp == "bridge":
        _run_bridge(cfg, writer)
    elif exp == "scales":
        _run_scales(cfg, writer)
    manifest = {
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "version": __version__,
        "started": start,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "files": writer.checksums(),
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="simulate", description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--set", dest="overrides", action="append", default=[])
    args = parser.parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text()) if Path(args.config).exists() else None
        if raw is None:
            raise ConfigError(f"config file not found: {args.config}")
        raw = apply_overrides(raw, args.overrides)
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = parse_config(raw)
    except (ConfigError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    try:
        manifest = run(cfg, out_dir=args.out)
    except NumericalContractError as e:
        print(f"numerical contract violation: {e}", file=sys.stderr)
        return 3
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    print(json.dumps({"config_hash": manifest["config_hash"], "files": len(manifest["files"])}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
