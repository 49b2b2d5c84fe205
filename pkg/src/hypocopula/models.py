"""Config documents -> copulas, and self-describing model files.

Config examples::

    {"type": "prescribed", "construction": "main",
     "H": {"family": "gaussian_shift", "delta": 1.0}}
    {"type": "prescribed", "construction": "from_L",
     "H": {"family": "gaussian_shift", "delta": 1.0}, "L": {"family": "linear", "k": 2}}
    {"type": "prescribed", "construction": "from_G",
     "H": {"family": "piecewise_linear", "u0": 0.25}, "G": {"family": "power", "k": 2}}
    {"type": "separable", "G": {"family": "sine"}}
    {"type": "separable", "L": {"family": "quadratic", "a": 0.5}}

An optional ``"options"`` object sets ``knots``, ``per_decade``, ``epsilon``
and ``rel_tol``; an optional ``"u_star"`` overrides the located sign change.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from .base import Copula
from .construction import BuildOptions
from .errors import CopulaError, DomainError, ModelFormatError
from .generators import g_from_dict, l_from_dict
from .prescribed import (PrescribedCopula, build_main, build_with_G, build_with_L,
                         prescribed_from_dict)
from .separable import (SeparableCopula, independence, power_copula, separable_from_dict,
                        separable_from_G, separable_from_L, sine_copula)
from .support import support_from_dict

FORMAT = "hypocopula-model"
VERSION = 1


def _options(cfg: dict) -> BuildOptions:
    raw = cfg.get("options", {}) or {}
    if not isinstance(raw, dict):
        raise ModelFormatError("options must be an object")
    unknown = set(raw) - {"knots", "per_decade", "epsilon", "rel_tol"}
    if unknown:
        raise ModelFormatError(f"unknown options {sorted(unknown)}")
    d = BuildOptions()
    opts = BuildOptions(int(raw.get("knots", d.knots)), int(raw.get("per_decade", d.per_decade)),
                        float(raw.get("epsilon", d.epsilon)), float(raw.get("rel_tol", d.rel_tol)))
    if opts.knots < 16 or opts.per_decade < 10:
        raise DomainError("options.knots must be >= 16 and options.per_decade >= 10")
    if not (0 < opts.epsilon < 1e-3) or not (0 < opts.rel_tol < 1e-3):
        raise DomainError("options.epsilon and options.rel_tol must lie in (0, 1e-3)")
    return opts


def _u_star(cfg: dict) -> float | None:
    v = cfg.get("u_star")
    if v is None:
        return None
    v = float(v)
    if not (0 < v < 1 and math.isfinite(v)):
        raise DomainError(f"u_star must lie in (0, 1), got {v!r}")
    return v


def _separable(cfg: dict, opts: BuildOptions) -> SeparableCopula:
    if "G" in cfg and "L" in cfg:
        raise ModelFormatError("give either G or L, not both")
    if "G" in cfg:
        g = cfg["G"]
        fam = g.get("family")
        # closed forms where they exist
        if fam == "power" and not cfg.get("numeric", False):
            k = float(g["k"])
            if not (k >= 1):
                raise DomainError(f"power G needs k >= 1, got {k!r}")
            return independence() if k == 1 else power_copula(k)
        if fam == "sine" and not cfg.get("numeric", False):
            return sine_copula()
        return separable_from_G(g_from_dict(g), _u_star(cfg), opts)
    if "L" in cfg:
        return separable_from_L(l_from_dict(cfg["L"]), _u_star(cfg), opts)
    raise ModelFormatError("separable config needs G or L")


def _prescribed(cfg: dict, opts: BuildOptions) -> PrescribedCopula:
    if "H" not in cfg:
        raise ModelFormatError("prescribed config needs H")
    h = support_from_dict(cfg["H"])
    kind = cfg.get("construction", "main")
    if kind == "main":
        return build_main(h, opts)
    if kind == "from_L":
        L = l_from_dict(cfg["L"])
        tag = "example_5_4" if (h.family_tag == "gaussian_shift" and L.family == "linear") else "from_L"
        return build_with_L(h, L, _u_star(cfg), opts, tag)
    if kind == "from_G":
        G = g_from_dict(cfg["G"])
        # piecewise H with a power G has closed-form K and F
        tag = "example_5_3" if (h.family_tag == "piecewise_linear" and G.family == "power") else "from_G"
        return build_with_G(h, G, _u_star(cfg), opts, tag)
    raise ModelFormatError(f"unknown construction {kind!r}")


def build_from_config(cfg: dict) -> Copula:
    """Construct the copula described by a config document."""
    if not isinstance(cfg, dict):
        raise ModelFormatError("config must be a JSON object")
    try:
        opts = _options(cfg)
        typ = cfg.get("type")
        if typ == "separable":
            return _separable(cfg, opts)
        if typ == "prescribed":
            return _prescribed(cfg, opts)
    except CopulaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad config: missing or malformed {exc}") from exc
    raise ModelFormatError(f"unknown copula type {cfg.get('type')!r}")


def model_document(c: Copula, config: dict | None = None) -> dict:
    doc = {"format": FORMAT, "version": VERSION, "config": config or {}, "model": c.to_dict()}
    if isinstance(c, PrescribedCopula):
        doc["u0"] = c.u0
        if c.construction_tag == "example_5_3":
            doc["closed_form_K"] = {"family": "piecewise_power", "u0": c.u0,
                                    "k": float(c.spec["G"]["k"])}
    return doc


def dumps_model(c: Copula, config: dict | None = None) -> str:
    # repr-based float output round-trips every double exactly
    return json.dumps(model_document(c, config), indent=1, allow_nan=False) + "\n"


def save_model(path, c: Copula, config: dict | None = None) -> None:
    Path(path).write_text(dumps_model(c, config))


def copula_from_document(doc: dict) -> Copula:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("not a model file")
    model = doc.get("model")
    if not isinstance(model, dict):
        raise ModelFormatError("model file has no model object")
    typ = model.get("type")
    if typ == "separable":
        return separable_from_dict(model)
    if typ == "prescribed":
        return prescribed_from_dict(model)
    raise ModelFormatError(f"unknown model type {typ!r}")


def load_model(path) -> Copula:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
    return copula_from_document(doc)
