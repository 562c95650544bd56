"""Pipeline configuration, build orchestration, and artifact export."""

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import (coding, product_family, refinement, symbolic, systems,
               transversal)
from .errors import BuildBudgetExceeded, MtvError, ParameterViolation
from .shadowing import shadowing_constant

log = logging.getLogger("mtv")


@dataclass
class PipelineConfig:
    system: object = "catid3"          # builtin name, path, or inline dict
    mode: str = "product"              # product | lattice | zero-center
    epsilon: float = 0.1
    delta: object = "auto"             # float or "auto" (largest admissible)
    rho: object = "auto"
    nu: object = "auto"
    kappa: float = 2.0
    horizon: int = 40
    samples: int = 256
    markov_samples: int = 100
    fiber_samples: int = 8
    strings: int = 1000
    tolerance: float = 1e-8
    surj_tolerance: float = 1e-6
    seed: int = 0
    out: str = "out"
    strict: bool = True
    max_discs: int = 500_000
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, doc):
        known = {f for f in cls.__dataclass_fields__ if f != "extras"}
        kw = {k: v for k, v in doc.items() if k in known}
        extras = {k: v for k, v in doc.items() if k not in known}
        return cls(**kw, extras=extras)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def resolve_system(self):
        if isinstance(self.system, dict):
            return systems.from_json_dict(self.system)
        return systems.load(self.system)

    def resolve_params(self, sys):
        """Concrete (delta, rho, nu) honoring the standing inequalities."""
        C, delta0 = shadowing_constant(sys, self.kappa)
        delta = self.delta
        if delta == "auto":
            delta = transversal.convention_delta(sys, self.epsilon, self.kappa)
        delta = float(delta)
        rho = self.rho
        if rho == "auto":
            rho = max(4.0 * C * delta, 2.0)   # seeded rectangles have O(1) size
        nu = self.nu
        if nu == "auto":
            nu = 0.99 * delta / (3.0 * sys.lip()) if delta > 0 else 0.0
        violations = []
        if self.mode != "zero-center":
            violations = transversal.check_convention(
                sys, self.epsilon, delta, self.kappa,
                nu=float(nu) if nu else None, rho=float(rho))
        if self.strict and violations:
            raise ParameterViolation("; ".join(violations))
        return {"C": C, "delta0": delta0, "delta": delta,
                "rho": float(rho), "nu": float(nu) if nu else 0.0,
                "violations": violations}


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    log.info("wrote %s", path)


# ---------------------------------------------------------------------------
# build

def build(config):
    """Run the configured construction and write the artifact set.

    Returns (markov_family, matrix_S, artifact_paths).
    """
    rng = np.random.default_rng(config.seed)
    sys = config.resolve_system()
    params = config.resolve_params(sys)
    outdir = config.out

    if config.mode == "zero-center":
        mf = product_family.build_zero_center_family()
    elif config.mode == "product":
        mf = product_family.build_product_family(sys, params["delta"],
                                                 config.epsilon)
    elif config.mode == "lattice":
        mf = _build_lattice(config, sys, params, rng)
    else:
        raise ParameterViolation(f"unknown mode {config.mode!r}")

    S = coding.build_matrix_S(mf, rng, samples=config.samples)
    paths = export_artifacts(mf, S, config, params)
    return mf, S, paths


def _build_lattice(config, sys, params, rng):
    """The literal lattice chain: family, subdivision, admissibility,
    base rectangles, refinement.  Raises with exact size estimates when
    the requested parameters exceed workstation scale."""
    size = transversal.lattice_size(sys, config.epsilon, params["delta"])
    lip = sys.lip()
    pieces_per_disc = max(1, int(np.ceil(2 * params["delta"]
                                         / max(params["nu"] / lip, 1e-12))) ** 2)
    est_symbols = size["discs"] * pieces_per_disc
    if est_symbols > config.max_discs:
        raise BuildBudgetExceeded(
            f"lattice run needs about {size['discs']:,} discs and "
            f"{est_symbols:,} symbols at delta={params['delta']:.3g}; "
            f"budget is {config.max_discs:,} elements")
    family = transversal.build_adapted_family(
        sys, config.epsilon, params["delta"], strict=config.strict,
        max_discs=config.max_discs)
    table = symbolic.subdivide(family, nu=params["nu"])
    A = symbolic.build_matrix_A(table)
    bases = refinement.base_rectangles(family, table, A, rng,
                                       samples=config.samples,
                                       horizon=config.horizon)
    return refinement.refine(bases, family, table, A)


def export_artifacts(mf, S, config, params):
    outdir = config.out
    doc = mf.to_json()
    doc["matrix_s"] = S.to_json()
    doc["config"] = {
        "mode": config.mode, "epsilon": config.epsilon,
        "delta": params["delta"], "rho": params["rho"], "nu": params["nu"],
        "kappa": config.kappa, "seed": config.seed,
        "violations": params["violations"],
    }
    paths = {}
    paths["partition"] = os.path.join(outdir, "partition.json")
    _write(paths["partition"], canonical_json(doc))
    paths["matrix_s"] = os.path.join(outdir, "matrix_s.dot")
    _write(paths["matrix_s"], S.to_dot())
    for i in range(min(mf.family.n, 16)):
        p = os.path.join(outdir, f"cells_disc_{i}.svg")
        _write(p, refinement.render_disc_svg(mf, i))
        paths[f"svg_{i}"] = p
    return paths


def load_partition(path):
    with open(path) as fh:
        doc = json.load(fh)
    if "rectangles" not in doc or not doc["rectangles"]:
        raise MtvError("malformed or empty partition document")
    mf = refinement.MarkovFamily.from_json(doc)
    S = coding.MatrixS(np.array(doc["matrix_s"]["matrix"], dtype=np.int8))
    return mf, S, doc


# ---------------------------------------------------------------------------
# verify

def verify(config, partition_path):
    """All verification suites; returns (report, ok)."""
    rng = np.random.default_rng(config.seed + 1)
    mf, S, doc = load_partition(partition_path)
    delta = mf.family.delta if mf.family.delta > 0 else 0.01
    report = {"partition": partition_path, "mode": mf.mode}

    markov = refinement.verify_markov(mf, rng, samples=config.markov_samples,
                                      fiber_samples=config.fiber_samples,
                                      tol=config.tolerance)
    report["markov"] = {"ok": markov["ok"], "n_triples": markov["n_triples"],
                        "violations": len(markov["violations"])}

    cover = product_family.covering_report(mf, pitch=delta / 4.0) \
        if mf.mode in ("product", "zero-center") else {"ok": None}
    report["covering"] = cover

    bad = refinement.check_disjoint_interiors(mf)
    report["disjoint_interiors"] = {"ok": not bad, "overlaps": bad}
    report["regular_closed"] = {"ok": not refinement.check_regular_closed(mf)}

    semi = coding.verify_semiconjugacy(
        mf, S, rng, n_strings=config.strings, L=config.horizon,
        tol=config.tolerance, surj_samples=min(config.strings, 200),
        surj_tol=config.surj_tolerance)
    report["semiconjugacy"] = semi

    ok = bool(markov["ok"] and report["disjoint_interiors"]["ok"]
              and report["regular_closed"]["ok"] and semi["ok"]
              and (cover["ok"] is not False))
    report["ok"] = ok
    return report, ok


def report_text(report):
    lines = [f"partition: {report.get('partition')}  mode: {report.get('mode')}"]
    for key in ("markov", "covering", "disjoint_interiors", "regular_closed"):
        sec = report.get(key, {})
        lines.append(f"  {key}: {'ok' if sec.get('ok') else sec}")
    semi = report.get("semiconjugacy", {})
    lines.append(f"  semiconjugacy: equivariance max err "
                 f"{semi.get('equivariance_max_err'):.3g}, surjectivity max err "
                 f"{semi.get('surjectivity_max_err'):.3g}, ok={semi.get('ok')}")
    lines.append(f"overall: {'PASS' if report.get('ok') else 'FAIL'}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# coding evaluation

def code(config, partition_path, string):
    mf, S, doc = load_partition(partition_path)
    pt, fs, fu = coding.h_point(mf, S, string, return_fibers=True)
    return {
        "point": [float(v) for v in pt],
        "stable_fiber": {"rect": fs.rect, "u": fs.coordinate, "width": fs.width,
                         "diameters": fs.diam_history},
        "unstable_fiber": {"rect": fu.rect, "s": fu.coordinate, "width": fu.width,
                           "diameters": fu.diam_history},
    }
