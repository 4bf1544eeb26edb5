"""Batch front end: JSON-configured runs emitting JSON tables and CSV grids.

Subcommands
    spectrum    closed-form eigenvalue table for m <= m_max
    reduce      conjugation plan carrying the model to normal form
    eigfun      one eigenfunction: polynomial data plus a sampled grid
    stationary  stationary Gaussian parameters and coordinate frame
    verify      truncated-basis residual table and trace/hermiticity report
    evolve      time series for a seeded mode relaxing onto the steady state

Exit codes: 0 success, 2 validation error (nothing written), 3 a
numerical tolerance was exceeded (the report is still written).
Identical configurations produce bit-identical output files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FrameMismatch, KLFormError
from .gauss import stationary_preset
from .operators import (
    GeneratorId,
    LiouvillianCoeffs,
    assemble_liouvillian,
    cl_coefficients,
    hpz_coefficients,
    kl_coefficients,
)
from .reduction import reduce_to_kl
from .spectrum import EigenLabel, distinct_labels, eigenvalue, transformed_eigenfunction
from .verify import (
    BasisConfig,
    assemble_matrix,
    evolve_series,
    expand,
    residual,
    trace_and_hermiticity,
)

__all__ = ["RunConfig", "GridSpec", "ConfigError", "load_config", "run", "main"]

COMMANDS = ("spectrum", "reduce", "eigfun", "stationary", "verify", "evolve")

DESK_PRESETS = {
    "kl": {"omega0": 1.0, "gamma": 0.3, "b": 1.0},
    "cl": {"omega0_prime": 1.0, "gamma": 0.6, "b_cl": 1.0},
    "hpz": {"omega0_prime": 1.0, "gamma": 0.6, "b_hpz": 1.0, "d": 0.2},
}

PRESET_KEYS = {
    "kl": ("omega0", "gamma", "b"),
    "cl": ("omega0_prime", "gamma", "b_cl"),
    "hpz": ("omega0_prime", "gamma", "b_hpz", "d"),
}

CONFIG_KEYS = {
    "model",
    "coefficients",
    "preset",
    "m_max",
    "basis_n",
    "tol",
    "out",
    "grid",
    "label",
    "seed_label",
    "b_target",
    "t_max",
    "n_times",
    "seed_amplitude",
}


class ConfigError(KLFormError):
    """A run configuration violates the schema or an invariant."""


@dataclass(frozen=True)
class GridSpec:
    """Rectangular sampling window for eigenfunction grids."""

    q_min: float = -3.0
    q_max: float = 3.0
    r_min: float = -3.0
    r_max: float = 3.0
    steps: int = 21

    def __post_init__(self):
        vals = (self.q_min, self.q_max, self.r_min, self.r_max)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError("grid bounds must be finite")
        if not (self.q_min < self.q_max and self.r_min < self.r_max):
            raise ConfigError("grid bounds must satisfy min < max")
        if not isinstance(self.steps, int) or self.steps < 2:
            raise ConfigError("grid steps must be an integer >= 2")


@dataclass(frozen=True)
class RunConfig:
    """Validated inputs for one CLI run.

    Exactly one of `coefficients` (model "generic") and `preset`
    (models "kl", "cl", "hpz") is present.
    """

    model: str
    coefficients: LiouvillianCoeffs | None = None
    preset: dict | None = None
    m_max: int = 2
    basis_n: int = 32
    tol: float = 1e-8
    out: str = "klform-out"
    grid: GridSpec = field(default_factory=GridSpec)
    label: tuple[int, int, int] = (1, 1, 1)
    seed_label: tuple[int, int, int] = (1, 0, 1)
    b_target: float = 1.0
    t_max: float | None = None
    n_times: int = 81
    seed_amplitude: float = 0.2

    def __post_init__(self):
        if self.model not in ("generic", "kl", "cl", "hpz"):
            raise ConfigError(f"unknown model {self.model!r}")
        if (self.coefficients is None) == (self.preset is None):
            raise ConfigError("exactly one of coefficients/preset must be present")
        if self.model == "generic" and self.coefficients is None:
            raise ConfigError("model 'generic' requires explicit coefficients")
        if self.model != "generic" and self.preset is None:
            raise ConfigError(f"model {self.model!r} requires preset parameters")
        if self.preset is not None:
            required = PRESET_KEYS[self.model]
            given = set(self.preset)
            if given != set(required):
                raise ConfigError(
                    f"model {self.model!r} needs preset keys {sorted(required)}, "
                    f"got {sorted(given)}"
                )
            for key, val in self.preset.items():
                if not isinstance(val, (int, float)) or not math.isfinite(val):
                    raise ConfigError(f"preset parameter {key!r} must be finite")
        if not isinstance(self.m_max, int) or self.m_max < 0:
            raise ConfigError("m_max must be a non-negative integer")
        if not isinstance(self.basis_n, int) or self.basis_n < 4:
            raise ConfigError("basis_n must be an integer >= 4")
        if not (isinstance(self.tol, float) and math.isfinite(self.tol) and self.tol > 0):
            raise ConfigError("tol must be a positive finite float")
        for name in ("label", "seed_label"):
            trip = getattr(self, name)
            if len(trip) != 3 or not all(isinstance(v, int) for v in trip):
                raise ConfigError(f"{name} must be three integers [m, n, sigma]")
        if not math.isfinite(self.b_target):
            raise ConfigError("b_target must be finite")
        if self.t_max is not None and not (
            math.isfinite(self.t_max) and self.t_max > 0
        ):
            raise ConfigError("t_max must be positive and finite")
        if not isinstance(self.n_times, int) or self.n_times < 2:
            raise ConfigError("n_times must be an integer >= 2")
        if not math.isfinite(self.seed_amplitude) or self.seed_amplitude == 0:
            raise ConfigError("seed_amplitude must be finite and nonzero")


def _as_float(value, name):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{name} must be a number")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{name} must be finite")
    return out


def _parse_coefficients(raw) -> LiouvillianCoeffs:
    if not isinstance(raw, dict) or set(raw) != {"h", "gamma", "g"}:
        raise ConfigError("coefficients must be an object with keys h, gamma, g")
    h = raw["h"]
    g = raw["g"]
    if not (isinstance(h, list) and len(h) == 3 and isinstance(g, list) and len(g) == 3):
        raise ConfigError("coefficient entries h and g must be length-3 arrays")
    try:
        return LiouvillianCoeffs(
            tuple(_as_float(x, "h") for x in h),
            _as_float(raw["gamma"], "gamma"),
            tuple(_as_float(x, "g") for x in g),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_triple(raw, name) -> tuple[int, int, int]:
    if not (isinstance(raw, list) and len(raw) == 3):
        raise ConfigError(f"{name} must be a three-element array [m, n, sigma]")
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in raw):
        raise ConfigError(f"{name} entries must be integers")
    return (raw[0], raw[1], raw[2])


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file and flag overrides into a validated RunConfig."""
    raw: dict = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if args.preset is not None:
        raw.pop("coefficients", None)
        raw["model"] = args.preset
        raw["preset"] = dict(DESK_PRESETS[args.preset])
    if args.m_max is not None:
        raw["m_max"] = args.m_max
    if args.basis_n is not None:
        raw["basis_n"] = args.basis_n
    if args.tol is not None:
        raw["tol"] = args.tol
    if args.out is not None:
        raw["out"] = args.out
    if "model" not in raw:
        raise ConfigError("no model selected; pass --preset or a config file")

    kwargs: dict = {"model": raw["model"]}
    if "coefficients" in raw:
        kwargs["coefficients"] = _parse_coefficients(raw["coefficients"])
    if "preset" in raw:
        preset = raw["preset"]
        if not isinstance(preset, dict):
            raise ConfigError("preset must be an object of named parameters")
        kwargs["preset"] = {k: _as_float(v, k) for k, v in preset.items()}
    if "m_max" in raw:
        if not isinstance(raw["m_max"], int):
            raise ConfigError("m_max must be an integer")
        kwargs["m_max"] = raw["m_max"]
    if "basis_n" in raw:
        if not isinstance(raw["basis_n"], int):
            raise ConfigError("basis_n must be an integer")
        kwargs["basis_n"] = raw["basis_n"]
    if "tol" in raw:
        kwargs["tol"] = _as_float(raw["tol"], "tol")
    if "out" in raw:
        if not isinstance(raw["out"], str) or not raw["out"]:
            raise ConfigError("out must be a non-empty path string")
        kwargs["out"] = raw["out"]
    if "grid" in raw:
        grid_raw = raw["grid"]
        if not isinstance(grid_raw, dict):
            raise ConfigError("grid must be an object")
        allowed = {"q_min", "q_max", "r_min", "r_max", "steps"}
        bad = set(grid_raw) - allowed
        if bad:
            raise ConfigError(f"unknown grid keys: {sorted(bad)}")
        fields = {k: _as_float(v, k) for k, v in grid_raw.items() if k != "steps"}
        if "steps" in grid_raw:
            if not isinstance(grid_raw["steps"], int):
                raise ConfigError("grid steps must be an integer")
            fields["steps"] = grid_raw["steps"]
        kwargs["grid"] = GridSpec(**fields)
    if "label" in raw:
        kwargs["label"] = _parse_triple(raw["label"], "label")
    if "seed_label" in raw:
        kwargs["seed_label"] = _parse_triple(raw["seed_label"], "seed_label")
    if "b_target" in raw:
        kwargs["b_target"] = _as_float(raw["b_target"], "b_target")
    if "t_max" in raw and raw["t_max"] is not None:
        kwargs["t_max"] = _as_float(raw["t_max"], "t_max")
    if "n_times" in raw:
        if not isinstance(raw["n_times"], int):
            raise ConfigError("n_times must be an integer")
        kwargs["n_times"] = raw["n_times"]
    if "seed_amplitude" in raw:
        kwargs["seed_amplitude"] = _as_float(raw["seed_amplitude"], "seed_amplitude")
    return RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# Deterministic serialization: floats at 17 significant digits, insertion
# order preserved, two-space indentation, trailing newline.


def _render(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {_render(v, indent + 1)}"
            for k, v in obj.items()
        )
        return "{\n" + rows + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rows = ",\n".join(f"{pad}  {_render(v, indent + 1)}" for v in obj)
        return "[\n" + rows + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_json(doc: dict) -> str:
    return _render(doc, 0) + "\n"


def _f(x: float) -> str:
    return format(float(x), ".17g")


def render_grid_csv(q_vals, r_vals, values) -> str:
    lines = ["Q,r,re_f,im_f"]
    for i, q in enumerate(q_vals):
        for j, r in enumerate(r_vals):
            z = values[i, j]
            lines.append(f"{_f(q)},{_f(r)},{_f(z.real)},{_f(z.imag)}")
    return "\n".join(lines) + "\n"


def _write_atomic(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Subcommand implementations.  Each returns ({filename: text}, passed).


def _build_coefficients(cfg: RunConfig) -> LiouvillianCoeffs:
    if cfg.model == "generic":
        return cfg.coefficients
    p = cfg.preset
    if cfg.model == "kl":
        return kl_coefficients(p["omega0"], p["gamma"], p["b"])
    if cfg.model == "cl":
        return cl_coefficients(p["omega0_prime"], p["gamma"], p["b_cl"])
    return hpz_coefficients(p["omega0_prime"], p["gamma"], p["b_hpz"], p["d"])


def _coeff_doc(c: LiouvillianCoeffs) -> dict:
    return {"h": list(c.h), "gamma": c.gamma, "g": list(c.g)}


def _label_doc(lab: EigenLabel) -> dict:
    return {"m": lab.m, "n": lab.n, "sigma": lab.sigma}


def _eigen_rows(m_max: int, omega0: float, gamma: float) -> list:
    rows = []
    for lab in distinct_labels(m_max):
        lam = eigenvalue(lab, omega0, gamma)
        row = _label_doc(lab)
        row["re_lambda"] = lam.real
        row["im_lambda"] = lam.imag
        rows.append(row)
    return rows


def cmd_spectrum(cfg: RunConfig):
    coeffs = _build_coefficients(cfg)
    plan = reduce_to_kl(coeffs, b_target=cfg.b_target)
    doc = {
        "model": cfg.model,
        "omega0": plan.omega0,
        "gamma": coeffs.gamma,
        "m_max": cfg.m_max,
        "modes": _eigen_rows(cfg.m_max, plan.omega0, coeffs.gamma),
    }
    return {"spectrum.json": render_json(doc)}, True


def cmd_reduce(cfg: RunConfig):
    coeffs = _build_coefficients(cfg)
    plan = reduce_to_kl(coeffs, b_target=cfg.b_target)
    doc = {
        "model": cfg.model,
        "source": _coeff_doc(coeffs),
        "target": _coeff_doc(plan.target),
        "omega0": plan.omega0,
        "b": plan.b,
        "replay_residual": plan.replay_residual(coeffs),
        "steps": [
            {"generator": gid.value, "parameter": param} for gid, param in plan.steps
        ],
    }
    return {"reduction.json": render_json(doc)}, True


def cmd_stationary(cfg: RunConfig):
    if cfg.model == "generic":
        coeffs = _build_coefficients(cfg)
        plan = reduce_to_kl(coeffs, b_target=cfg.b_target)
        state = transformed_eigenfunction(plan, EigenLabel(0, 0, 1), coeffs).gaussian
        frame = state.frame()
    else:
        state, frame = stationary_preset(cfg.model, **cfg.preset)
    doc = {
        "model": cfg.model,
        "mu": state.mu,
        "kappa": state.kappa,
        "nu": state.nu,
        "frame": {"s_q": frame.s_q, "s_r": frame.s_r},
    }
    return {"stationary.json": render_json(doc)}, True


def cmd_eigfun(cfg: RunConfig):
    coeffs = _build_coefficients(cfg)
    plan = reduce_to_kl(coeffs, b_target=cfg.b_target)
    mode = transformed_eigenfunction(plan, EigenLabel(*cfg.label), coeffs)
    lam = complex(mode.eigenvalue)

    def poly_rows(poly):
        rows = []
        for (a, b) in sorted(poly.terms):
            c = poly.terms[(a, b)]
            rows.append(
                {"q_power": a, "r_power": b, "re": c.real, "im": c.imag}
            )
        return rows

    g = mode.gaussian
    doc = {
        "model": cfg.model,
        "label": _label_doc(mode.label),
        "eigenvalue": {"re": lam.real, "im": lam.imag},
        "gaussian": {"mu": g.mu, "kappa": g.kappa, "nu": g.nu},
        "frame": {"s_q": mode.frame.s_q, "s_r": mode.frame.s_r},
        "operator_polynomial": poly_rows(mode.pi),
        "multiplier_polynomial": poly_rows(mode.expanded_poly),
    }
    grid = cfg.grid
    q_vals = np.linspace(grid.q_min, grid.q_max, grid.steps)
    r_vals = np.linspace(grid.r_min, grid.r_max, grid.steps)
    values = mode.evaluate(q_vals[:, None], r_vals[None, :])
    return {
        "eigenfunction.json": render_json(doc),
        "eigenfunction.csv": render_grid_csv(q_vals, r_vals, values),
    }, True


def cmd_verify(cfg: RunConfig):
    coeffs = _build_coefficients(cfg)
    plan = reduce_to_kl(coeffs, b_target=cfg.b_target)
    labels = distinct_labels(cfg.m_max)
    modes = [transformed_eigenfunction(plan, lab, coeffs) for lab in labels]
    frame = modes[0].gaussian.frame()
    basis = BasisConfig(cfg.basis_n, cfg.basis_n, frame)
    k_mat = assemble_matrix(assemble_liouvillian(coeffs), basis)
    rows = []
    worst = 0.0
    stationary_vec = None
    for mode in modes:
        vec = expand(mode, basis)
        if mode.label.m == 0:
            stationary_vec = vec
        res = residual(k_mat, vec, mode.eigenvalue)
        worst = max(worst, res)
        row = _label_doc(mode.label)
        lam = complex(mode.eigenvalue)
        row["re_lambda"] = lam.real
        row["im_lambda"] = lam.imag
        row["residual"] = res
        rows.append(row)
    trace, defect = trace_and_hermiticity(stationary_vec, basis)
    trace_error = abs(trace - 1.0)
    passed = worst <= cfg.tol and trace_error <= cfg.tol and defect <= cfg.tol
    doc = {
        "model": cfg.model,
        "m_max": cfg.m_max,
        "basis_n": cfg.basis_n,
        "tol": cfg.tol,
        "modes": rows,
        "max_residual": worst,
        "trace": {"re": trace.real, "im": trace.imag},
        "trace_error": trace_error,
        "hermiticity_defect": defect,
        "passed": passed,
    }
    return {"verify.json": render_json(doc)}, passed


def cmd_evolve(cfg: RunConfig):
    coeffs = _build_coefficients(cfg)
    plan = reduce_to_kl(coeffs, b_target=cfg.b_target)
    gamma = coeffs.gamma
    seed = transformed_eigenfunction(plan, EigenLabel(*cfg.seed_label), coeffs)
    steady = transformed_eigenfunction(plan, EigenLabel(0, 0, 1), coeffs)
    frame = steady.gaussian.frame()
    basis = BasisConfig(cfg.basis_n, cfg.basis_n, frame)
    k_mat = assemble_matrix(assemble_liouvillian(coeffs), basis)
    v_steady = expand(steady, basis)
    v_seed = expand(seed, basis)
    f0 = v_steady + cfg.seed_amplitude * v_seed / np.linalg.norm(v_seed)
    t_max = cfg.t_max if cfg.t_max is not None else 10.0 / gamma
    times = np.linspace(0.0, t_max, cfg.n_times)
    series = evolve_series(k_mat, f0, times)
    dev0 = float(np.linalg.norm(series[0] - v_steady))
    rows = []
    overlaps = np.empty(cfg.n_times)
    max_trace_error = 0.0
    max_defect = 0.0
    for i, t in enumerate(times):
        vec = series[i]
        trace, defect = trace_and_hermiticity(vec, basis)
        max_trace_error = max(max_trace_error, abs(trace - 1.0))
        max_defect = max(max_defect, defect)
        overlaps[i] = float(np.linalg.norm(vec - v_steady)) / dev0
        rows.append(
            {
                "t": float(t),
                "re_trace": trace.real,
                "im_trace": trace.imag,
                "norm": float(np.linalg.norm(vec)),
                "overlap": overlaps[i],
            }
        )
    slope = np.polyfit(times, np.log(overlaps), 1)[0]
    expected = abs(complex(seed.eigenvalue).real)
    fitted = -float(slope)
    doc = {
        "model": cfg.model,
        "gamma": gamma,
        "seed_label": _label_doc(seed.label),
        "t_max": float(t_max),
        "n_times": cfg.n_times,
        "rows": rows,
        "expected_rate": expected,
        "fitted_rate": fitted,
        "rate_rel_error": abs(fitted - expected) / expected if expected else 0.0,
        "max_trace_error": max_trace_error,
        "max_hermiticity_defect": max_defect,
    }
    passed = max_trace_error <= cfg.tol and max_defect <= cfg.tol
    return {"evolve.json": render_json(doc)}, passed


DISPATCH = {
    "spectrum": cmd_spectrum,
    "reduce": cmd_reduce,
    "eigfun": cmd_eigfun,
    "stationary": cmd_stationary,
    "verify": cmd_verify,
    "evolve": cmd_evolve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klform",
        description="Reductions, spectra and eigenfunctions of quadratic "
        "damped-oscillator evolution operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} pipeline")
        cmd.add_argument("--config", help="path to a JSON run configuration")
        cmd.add_argument(
            "--preset",
            choices=sorted(DESK_PRESETS),
            help="use a named model at its reference parameters",
        )
        cmd.add_argument("--m-max", dest="m_max", type=int, help="largest mode index")
        cmd.add_argument(
            "--basis-n", dest="basis_n", type=int, help="basis size per coordinate"
        )
        cmd.add_argument("--tol", type=float, help="pass/fail tolerance")
        cmd.add_argument("--out", help="output directory")
    return parser


def run(command: str, cfg: RunConfig) -> tuple[dict, bool]:
    """Execute one subcommand; returns ({filename: text}, passed)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FrameMismatch)
        return DISPATCH[command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        artifacts, passed = run(args.command, cfg)
    except KLFormError as exc:
        sys.stdout.write(render_json({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    except ValueError as exc:
        sys.stdout.write(render_json({"error": "ValueError", "message": str(exc)}))
        return 2
    os.makedirs(cfg.out, exist_ok=True)
    for name in sorted(artifacts):
        _write_atomic(os.path.join(cfg.out, name), artifacts[name])
    status = "ok" if passed else "tolerance_failure"
    doc = {"status": status, "out": cfg.out, "files": sorted(artifacts)}
    sys.stdout.write(render_json(doc))
    return 0 if passed else 3


if __name__ == "__main__":
    sys.exit(main())
