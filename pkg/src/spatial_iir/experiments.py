"""Configuration-driven experiment runners behind the CLI.

Every runner consumes a validated JSON config and returns ``(meta, header,
rows)``; the writers serialize those to CSV (default) or JSON lines with the
run metadata up front and a completion trailer at the end, so partial files
are detectable.  All runners are deterministic given the config and seed.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import numpy as np
from jsonschema import Draft202012Validator

from . import estimators, patterns
from .arrays import ArrayGeometry, TargetScene, spatial_frequency, steering_matrix
from .beamformers import optimal_weights, transfer_derivatives, transfer_value
from .errors import PoleAtAngle, SpatialIIRError

ESTIMATOR_METHODS = ("alg1", "alg2", "music", "esprit", "robust", "nested", "reduced")
PATTERN_SELECTORS = ("fir", "single", "array", "array_finite")


class ConfigError(Exception):
    """Invalid configuration (schema violation or bad field value)."""


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "elements": {"type": "integer", "minimum": 2},
                "spacing_wavelengths": {
                    "type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
            },
            "required": ["elements"],
        },
        "scene": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "targets": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "theta_deg": {
                                "type": "number",
                                "exclusiveMinimum": 0, "exclusiveMaximum": 180},
                            "power_db": {"type": "number"},
                        },
                        "required": ["theta_deg"],
                    },
                },
                "snr_db": {"type": "number"},
                "snapshots": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "method": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": list(ESTIMATOR_METHODS)},
                "params": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "selectors": {
                            "type": "array",
                            "items": {"enum": list(PATTERN_SELECTORS)},
                        },
                        "grid_points": {"type": "integer", "minimum": 2},
                        "k": {"type": "number"},
                        "r": {"type": "number"},
                        "clamp_db": {"type": "number"},
                        "retransmissions": {"type": "integer", "minimum": 0},
                        "lambda_r": {"type": "number", "minimum": 0},
                        "subarray_size": {"type": "integer", "minimum": 1},
                        "nested": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {
                                "n1": {"type": "integer", "minimum": 1},
                                "n2": {"type": "integer", "minimum": 1},
                            },
                            "required": ["n1", "n2"],
                        },
                        "peak_min_separation_deg": {"type": "number", "minimum": 0},
                        "n_list": {
                            "type": "array", "minItems": 1,
                            "items": {"type": "integer", "minimum": 2},
                        },
                        "psi_offsets": {
                            "type": "array", "minItems": 1,
                            "items": {"type": "number"},
                        },
                        "omega_s": {"type": "number", "exclusiveMinimum": 0},
                        "sigma2": {"type": "number", "exclusiveMinimum": 0},
                        "phi": {"type": "number"},
                    },
                },
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "methods": {
                    "type": "array", "minItems": 1,
                    "items": {"enum": list(ESTIMATOR_METHODS)},
                },
                "snr_db": {"type": "array", "minItems": 1,
                           "items": {"type": "number"}},
                "retransmissions": {"type": "array", "minItems": 1,
                                    "items": {"type": "integer", "minimum": 0}},
                "monte_carlo": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "format": {"enum": ["csv", "jsonl"]},
                "path": {"type": "string"},
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)


def validate_config(cfg: dict) -> dict:
    errors = sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: e.json_path)
    if errors:
        msgs = "; ".join(f"{e.json_path}: {e.message}" for e in errors)
        raise ConfigError(msgs)
    return cfg


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return validate_config(cfg)


def preset_names() -> list:
    files = resources.files("spatial_iir").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    res = resources.files("spatial_iir").joinpath("presets", f"{name}.json")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {preset_names()}")
    return validate_config(json.loads(res.read_text(encoding="utf-8")))


def _section(cfg, name) -> dict:
    return cfg.get(name) or {}


def _params(cfg) -> dict:
    return _section(cfg, "method").get("params") or {}


def _require(cfg, path_parts):
    node = cfg
    for part in path_parts:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"missing required config field {'.'.join(path_parts)}")
        node = node[part]
    return node


def geometry_from_config(cfg) -> ArrayGeometry:
    geo = _require(cfg, ("geometry",))
    try:
        return ArrayGeometry(geo["elements"], geo.get("spacing_wavelengths", 0.5))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"geometry: {exc}") from exc


def scene_from_config(cfg, seed=None, snr_db=None) -> TargetScene:
    sc = _require(cfg, ("scene",))
    targets = sc.get("targets") or []
    if not targets:
        raise ConfigError("scene.targets must list at least one target")
    thetas = [t["theta_deg"] for t in targets]
    powers = [t.get("power_db", 0.0) for t in targets]
    try:
        return TargetScene.from_degrees(
            thetas,
            snr_db=sc.get("snr_db", 0.0) if snr_db is None else snr_db,
            snapshots=sc.get("snapshots", 256),
            seed=sc.get("seed", 0) if seed is None else seed,
            powers_db=powers,
        )
    except SpatialIIRError as exc:
        raise ConfigError(f"scene: {exc}") from exc


def _fmt(value):
    """Round presentation of dB/degree floats: 4 decimals in files."""
    return float(np.round(value, 4))


# ---------------------------------------------------------------------------
# pattern command (fig3 / fig4 data)


def run_pattern(cfg):
    geometry = geometry_from_config(cfg)
    scene = scene_from_config(cfg)
    if len(scene.thetas) != 1:
        raise ConfigError("pattern command expects exactly one target")
    params = _params(cfg)
    grid_points = params.get("grid_points", patterns.DEFAULT_GRID_POINTS)
    if grid_points < patterns.MIN_GRID_POINTS:
        raise ConfigError(
            f"method.params.grid_points: pattern grids need >= "
            f"{patterns.MIN_GRID_POINTS} points")
    selectors = params.get("selectors", list(PATTERN_SELECTORS))
    r = params.get("r", 1.0)
    k = params.get("k", 1.0)
    clamp_db = params.get("clamp_db", patterns.DEFAULT_CLAMP_DB)
    n_passes = params.get("retransmissions", 100)
    theta0 = scene.thetas[0]
    psi0 = spatial_frequency(theta0, geometry)
    thetas = np.linspace(0.0, np.pi, grid_points, endpoint=False)
    corr = patterns._steered_correlation(
        spatial_frequency(thetas, geometry), psi0, geometry.elements)
    num = r * corr
    cap = 10.0 ** (clamp_db / 20.0)
    rows = []
    for sel in selectors:
        if sel == "fir":
            resp = num
        elif sel == "single":
            resp = _clamped_ratio(num, 1.0 - num, cap)
        elif sel == "array":
            resp = _clamped_ratio(num, 1.0 - (r / k) * corr**2, cap)
        elif sel == "array_finite":
            q = (r / k) * corr**2
            resp = num * _geometric_partial_sum(q, n_passes)
            resp = _apply_cap(resp, cap, num)
        else:
            raise ConfigError(f"unknown selector {sel!r}")
        mag = np.abs(resp)
        mag_db = 20.0 * np.log10(np.maximum(mag, 1e-300))
        for th, db in zip(thetas, mag_db):
            rows.append([_fmt(np.rad2deg(th)), sel, _fmt(db),
                         bool(db >= clamp_db - 1e-9)])
    meta = {
        "command": "pattern", "elements": geometry.elements,
        "spacing_wavelengths": geometry.spacing_wavelengths,
        "target_theta_deg": _fmt(np.rad2deg(theta0)),
        "r": r, "k": k, "clamp_db": clamp_db,
        "retransmissions": n_passes, "grid_points": grid_points,
    }
    return meta, ["theta_deg", "method", "magnitude_db", "clamped"], rows


def _geometric_partial_sum(q, n_terms):
    """(1 - q^(M+1)) / (1 - q) with the q -> 1 limit handled per element."""
    q = np.asarray(q, dtype=complex)
    near_one = np.abs(1.0 - q) < 1e-9
    safe = np.where(near_one, 2.0, q)
    out = (1.0 - safe ** (n_terms + 1)) / (1.0 - safe)
    return np.where(near_one, float(n_terms + 1), out)


def _clamped_ratio(num, den, cap):
    with np.errstate(divide="ignore", invalid="ignore"):
        resp = num / den
    return _apply_cap(resp, cap, num)


def _apply_cap(resp, cap, num):
    bad = ~np.isfinite(resp) | (np.abs(resp) > cap)
    if np.any(bad):
        resp = resp.copy()
        num_bad = np.broadcast_to(num, resp.shape)[bad]
        phase = np.where(np.abs(num_bad) > 0, num_bad / np.abs(num_bad), 1.0)
        resp[bad] = cap * phase
    return resp


# ---------------------------------------------------------------------------
# fsll command


def run_fsll(cfg):
    params = _params(cfg)
    n_list = params.get("n_list")
    if not n_list:
        raise ConfigError("method.params.n_list is required for the fsll command")
    if any(n < 8 for n in n_list):
        raise ConfigError("method.params.n_list entries must be >= 8")
    k = params.get("k", 1.0)
    r = params.get("r", 1.0)
    grid_points = params.get("grid_points", patterns.DEFAULT_GRID_POINTS)
    if grid_points < patterns.MIN_GRID_POINTS:
        raise ConfigError(
            f"method.params.grid_points: fsll grids need >= "
            f"{patterns.MIN_GRID_POINTS} points")
    rows = []
    prev_db = None
    for n in n_list:
        grid_val = patterns.feedback_fsll_grid(n, k=k, r=r, grid_points=grid_points)
        closed_val = patterns.closed_form_fsll(n, k=k)
        fir_pattern = patterns.beam_pattern("fir", 0.0, ArrayGeometry(n),
                                            grid_points=max(grid_points, 64 * n))
        fir_db = patterns.first_sidelobe_level(fir_pattern)
        grid_db = 10.0 * np.log10(grid_val)
        ratio = "" if prev_db is None else _fmt(grid_db - prev_db)
        rows.append([n, _fmt(grid_db), _fmt(10.0 * np.log10(closed_val)),
                     _fmt(fir_db), ratio])
        prev_db = grid_db
    meta = {"command": "fsll", "k": k, "r": r, "grid_points": grid_points}
    header = ["elements", "feedback_fsll_grid_db", "feedback_fsll_closed_db",
              "fir_fsll_db", "doubling_ratio_db"]
    return meta, header, rows


# ---------------------------------------------------------------------------
# estimate command (fig6 data)


def _dispatch_estimator(name, scene, geometry, params, grid):
    n_passes = params.get("retransmissions", 2)
    if name == "alg1":
        return estimators.feedback_mvdr_alg1(scene, geometry, n_passes, grid)
    if name == "alg2":
        return estimators.feedback_mvdr_alg2(scene, geometry, n_passes, grid)
    if name == "nested":
        nested = params.get("nested") or {}
        n1 = nested.get("n1", geometry.elements // 2)
        n2 = nested.get("n2", geometry.elements - geometry.elements // 2)
        if n1 + n2 != geometry.elements:
            raise ConfigError("nested split must use all elements")
        return estimators.nested_mvdr(scene, grid, n1=n1, n2=n2,
                                      spacing=geometry.spacing_wavelengths)
    if name == "reduced":
        return estimators.reduced_dim_mvdr(
            scene, geometry, params.get("subarray_size", 2), grid)
    cov = estimators.sample_autocorrelation(
        estimators.synthesize_snapshots(scene, geometry))
    if name == "music":
        return estimators.music(cov, len(scene.thetas), grid, geometry)
    if name == "robust":
        return estimators.robust_mvdr(cov, grid, params.get("lambda_r", 0.05),
                                      geometry)
    if name == "esprit":
        return estimators.esprit(cov, len(scene.thetas), geometry)
    raise ConfigError(f"unknown method {name!r}")


def run_estimate(cfg):
    geometry = geometry_from_config(cfg)
    scene = scene_from_config(cfg)
    method = _section(cfg, "method").get("name")
    if method is None:
        raise ConfigError("method.name is required for the estimate command")
    params = _params(cfg)
    grid = estimators.theta_grid(params.get("grid_points",
                                            estimators.DEFAULT_GRID_POINTS))
    try:
        result = _dispatch_estimator(method, scene, geometry, params, grid)
    except ValueError as exc:
        raise ConfigError(f"method {method!r}: {exc}") from exc
    min_sep = np.deg2rad(params.get("peak_min_separation_deg", 3.0))
    rows = []
    if isinstance(result, estimators.PseudoSpectrum):
        pick = estimators.peaks_to_angles(result, len(scene.thetas), min_sep)
        angles = pick.angles
        power_db = 10.0 * np.log10(np.maximum(result.power, 1e-300))
        for th, db in zip(result.theta_grid, power_db):
            rows.append(["spectrum", method, _fmt(np.rad2deg(th)), _fmt(db)])
    else:
        angles = tuple(result)
    for th in angles:
        rows.append(["peak", method, _fmt(np.rad2deg(th)), ""])
    est_rmse = estimators.rmse(scene.thetas, angles)
    meta = {
        "command": "estimate", "method": method,
        "elements": geometry.elements, "snr_db": scene.snr_db,
        "snapshots": scene.snapshots, "seed": scene.seed,
        "targets_deg": [_fmt(np.rad2deg(t)) for t in scene.thetas],
        "rmse_deg": _fmt(est_rmse),
    }
    return meta, ["kind", "method", "theta_deg", "power_db"], rows


# ---------------------------------------------------------------------------
# sweep command (fig5 / fig7 data)


def _sweep_cell(cfg, method, snr_db, n_passes):
    geometry = geometry_from_config(cfg)
    params = dict(_params(cfg))
    params["retransmissions"] = n_passes
    sweep = _section(cfg, "sweep")
    trials = sweep.get("monte_carlo", 100)
    base_seed = _section(cfg, "scene").get("seed", 0)
    grid = estimators.theta_grid(params.get("grid_points",
                                            estimators.DEFAULT_GRID_POINTS))
    min_sep = np.deg2rad(params.get("peak_min_separation_deg", 3.0))
    errors = []
    failure = ""
    for trial in range(trials):
        scene = scene_from_config(cfg, seed=base_seed + trial, snr_db=snr_db)
        try:
            result = _dispatch_estimator(method, scene, geometry, params, grid)
            if isinstance(result, estimators.PseudoSpectrum):
                angles = estimators.peaks_to_angles(
                    result, len(scene.thetas), min_sep).angles
            else:
                angles = tuple(result)
            errors.append(estimators.rmse(scene.thetas, angles))
        except (SpatialIIRError, ValueError) as exc:
            failure = f"{type(exc).__name__} at trial {trial}"
            break
    mean_rmse = float(np.mean(errors)) if errors and not failure else float("nan")
    return [snr_db, method, n_passes,
            _fmt(mean_rmse) if not failure else "", trials, base_seed, failure]


def run_sweep(cfg, threads: int = 1):
    sweep = _section(cfg, "sweep")
    for field in ("methods", "snr_db", "retransmissions"):
        if not sweep.get(field):
            raise ConfigError(f"sweep.{field} must be a non-empty list")
    cells = [(m, s, p) for m in sweep["methods"]
             for s in sweep["snr_db"] for p in sweep["retransmissions"]]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: _sweep_cell(cfg, *c), cells))
    else:
        rows = [_sweep_cell(cfg, *c) for c in cells]
    rows.sort(key=lambda row: (row[1], row[0], row[2]))
    scene_cfg = _section(cfg, "scene")
    meta = {
        "command": "sweep",
        "methods": sweep["methods"],
        "trials": sweep.get("monte_carlo", 100),
        "seed": scene_cfg.get("seed", 0),
        "targets_deg": [t["theta_deg"] for t in scene_cfg.get("targets", [])],
        "snapshots": scene_cfg.get("snapshots", 256),
    }
    header = ["snr_db", "method", "retransmissions", "rmse_deg",
              "trials", "seed", "error"]
    return meta, header, rows


# ---------------------------------------------------------------------------
# fim command


def run_fim(cfg):
    geometry = geometry_from_config(cfg)
    scene = scene_from_config(cfg)
    if len(scene.thetas) != 1:
        raise ConfigError("fim command expects exactly one target")
    params = _params(cfg)
    k = params.get("k", 1.0)
    phi = params.get("phi", 0.0)
    omega_s = params.get("omega_s", 2.0 * np.pi)
    sigma2 = params.get("sigma2", 1.0)
    offsets = params.get("psi_offsets")
    if offsets is None:
        offsets = [0.0] + [round(x, 6) for x in np.linspace(0.05, 1.0, 20)]
    psi0 = spatial_frequency(scene.thetas[0], geometry)
    weights = optimal_weights(psi0, geometry.elements, k=k)
    from .beamformers import fisher_information  # local to keep module load light
    rows = []
    step = 1e-6
    for off in offsets:
        psi = psi0 + off
        try:
            fim = fisher_information(weights, psi, phi, omega_s, sigma2)
            d_psi, _ = transfer_derivatives(weights, psi, phi)
            fd = (transfer_value(weights, psi + step, phi)
                  - transfer_value(weights, psi - step, phi)) / (2.0 * step)
            rel = abs(d_psi - fd) / max(abs(d_psi), np.finfo(float).tiny)
            rows.append([off, fim.j_psipsi, fim.j_psiphi, fim.j_phiphi,
                         float(rel), False])
        except PoleAtAngle:
            rows.append([off, "", "", "", "", True])
    meta = {"command": "fim", "elements": geometry.elements, "k": k,
            "phi": phi, "omega_s": omega_s, "sigma2": sigma2,
            "psi0": _fmt(psi0)}
    header = ["psi_offset", "j_psipsi", "j_psiphi", "j_phiphi",
              "fd_rel_err", "pole"]
    return meta, header, rows


# ---------------------------------------------------------------------------
# output writers


def _cell_str(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_csv(path, meta, header, rows, complete=True):
    lines = [f"# {key}={json.dumps(val, sort_keys=True)}" for key, val in
             sorted(meta.items())]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell_str(v) for v in row))
    lines.append("# status=" + ("complete" if complete else "incomplete"))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_jsonl(path, meta, header, rows, complete=True):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for row in rows:
            fh.write(json.dumps(dict(zip(header, row)), sort_keys=True) + "\n")
        fh.write(json.dumps({"_status": "complete" if complete else "incomplete"})
                 + "\n")


def write_rows(path, meta, header, rows, fmt="csv", complete=True):
    if fmt == "csv":
        write_csv(path, meta, header, rows, complete)
    elif fmt == "jsonl":
        write_jsonl(path, meta, header, rows, complete)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
