"""Decision table for the Donsker and pregaussian properties of Besov unit balls."""

import math
from dataclasses import dataclass, field

from .besov import BesovParams
from .errors import DescriptorError

MEASURE_CLASSES = ("any", "thm4", "weight_bounded_density", "bounded_density_lower_bounded",
                   "bounded_density")

# what each measure class guarantees about the density
_CAPS = {
    "any": frozenset(),
    "bounded_density": frozenset({"bounded"}),
    "bounded_density_lower_bounded": frozenset({"bounded", "lower"}),
    "weight_bounded_density": frozenset({"bounded", "weight"}),
    "thm4": frozenset({"bounded", "lower", "weight", "heavy_tail"}),
}

DONSKER = ("universal_donsker", "donsker_under_moment", "not_donsker", "open")
PREGAUSSIAN = ("pregaussian", "not_pregaussian", "open")

RULES = {
    "universal_low_p": "p <= 2 and s > d/p: Donsker for every law",
    "universal_line_endpoint": "d = q = 1, 1 <= p < 2, s = 1/p: Donsker for every law",
    "moment_conditional": "p > 2, s > d/2: Donsker under a moment of order > d/2 - d/p",
    "heavy_tail_counterexample": "p > 2, s > d/2, density ~ <x>^(-d-2 delta): not pregaussian",
    "weighted_density_pregaussian": "p < 2, s > d/2, sup density <x>^d finite: pregaussian",
    "low_smoothness_lower_bound": "0 < s < d/2, density bounded below on an open set: not pregaussian",
    "envelope_blowup": "bounded density, s < d/p or (s = d/p, q > 1): not Donsker",
    "no_rule": "no decision rule applies: open",
}


@dataclass(frozen=True)
class Classification:
    donsker_verdict: str
    pregaussian_verdict: str
    gamma_required: float = None
    citations: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        out = {"donsker_verdict": self.donsker_verdict,
               "pregaussian_verdict": self.pregaussian_verdict,
               "citations": list(self.citations),
               "rules": [RULES[c] for c in self.citations]}
        if self.gamma_required is not None:
            out["gamma_required"] = self.gamma_required
        return out


def parse_descriptor(desc):
    """Accepts ``"bounded_density"``, ``("thm4", delta)`` or ``{"class": "thm4", "delta": delta}``."""
    if isinstance(desc, str):
        name, delta = desc, None
    elif isinstance(desc, dict):
        name, delta = desc.get("class"), desc.get("delta")
    elif isinstance(desc, (tuple, list)) and desc:
        name, delta = desc[0], (desc[1] if len(desc) > 1 else None)
    else:
        raise DescriptorError(f"unreadable measure descriptor {desc!r}")
    if name not in MEASURE_CLASSES:
        raise DescriptorError(f"unknown measure class {name!r}")
    if name == "thm4":
        if delta is None:
            raise DescriptorError("thm4 descriptor needs delta")
        delta = float(delta)
    return name, delta


def _close(a, b):
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def classify(params: BesovParams, measure_class) -> Classification:
    name, delta = parse_descriptor(measure_class)
    s, p, q, d = params.s, params.p, params.q, params.d
    inv_p = 0.0 if p == math.inf else 1.0 / p
    crit = d * inv_p  # d/p
    caps = _CAPS[name]
    if name == "thm4":
        if not p > 2:
            raise DescriptorError("the heavy-tailed construction needs p > 2")
        if not (0 < delta <= d / 2 - crit + 1e-12):
            raise DescriptorError(f"delta must lie in (0, d/2 - d/p], got {delta}")

    donsker, pg, gamma_req, cites = "open", "open", None, []

    # positive results
    if p <= 2 and s > crit and not _close(s, crit):
        donsker, pg = "universal_donsker", "pregaussian"
        cites.append("universal_low_p")
    elif d == 1 and q == 1 and 1 <= p < 2 and _close(s, 1.0 / p):
        donsker, pg = "universal_donsker", "pregaussian"
        cites.append("universal_line_endpoint")
    elif p > 2 and s > d / 2:
        donsker, gamma_req = "donsker_under_moment", d / 2 - crit
        cites.append("moment_conditional")
    if p < 2 and s > d / 2 and "weight" in caps and pg == "open":
        pg = "pregaussian"
        cites.append("weighted_density_pregaussian")

    # negative results override conditional positives
    if donsker != "universal_donsker":
        if name == "thm4" and p > 2 and s > d / 2:
            donsker, pg, gamma_req = "not_donsker", "not_pregaussian", None
            cites.append("heavy_tail_counterexample")
        if 0 < s < d / 2 and "lower" in caps:
            donsker, pg, gamma_req = "not_donsker", "not_pregaussian", None
            cites.append("low_smoothness_lower_bound")
        if "bounded" in caps and s > 0 and (
                (s < crit and not _close(s, crit)) or (_close(s, crit) and q > 1)):
            donsker, gamma_req = "not_donsker", None
            cites.append("envelope_blowup")
    if not cites:
        cites.append("no_rule")
    return Classification(donsker, pg, gamma_req, tuple(cites))


def consistent(c: Classification) -> bool:
    """The verdict invariants: not pregaussian forces not Donsker; universal forces pregaussian."""
    if c.donsker_verdict not in DONSKER or c.pregaussian_verdict not in PREGAUSSIAN:
        return False
    if c.pregaussian_verdict == "not_pregaussian" and c.donsker_verdict != "not_donsker":
        return False
    if c.donsker_verdict == "universal_donsker" and c.pregaussian_verdict != "pregaussian":
        return False
    return True


def default_measure_class(measure_desc: dict):
    """Strongest class guaranteed by a concrete measure descriptor."""
    kind = measure_desc.get("kind")
    if kind == "thm4":
        return ("thm4", float(measure_desc["delta"]))
    if kind == "gaussian":
        return "weight_bounded_density"
    if kind == "uniform":
        return "bounded_density_lower_bounded"
    return "any"
