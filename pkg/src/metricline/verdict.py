"""Outcome of a check: Certified, Refuted or Inconclusive."""

from __future__ import annotations

from dataclasses import dataclass, field

CERTIFIED = "Certified"
REFUTED = "Refuted"
INCONCLUSIVE = "Inconclusive"

CAVEAT = "numerical certificate on sampled sets"

EXIT_CODES = {CERTIFIED: 0, REFUTED: 2, INCONCLUSIVE: 3}


@dataclass
class Verdict:
    kind: str
    theorem: str | None = None
    evidence: dict = field(default_factory=dict)
    witness: dict | None = None
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in EXIT_CODES:
            raise ValueError(f"unknown verdict kind {self.kind!r}")
        if self.kind == REFUTED and not self.witness:
            raise ValueError("a refutation needs a witness")

    @classmethod
    def certified(cls, theorem: str, evidence: dict, diagnostics=None):
        return cls(CERTIFIED, theorem, evidence, None, list(diagnostics or []))

    @classmethod
    def refuted(cls, witness: dict, evidence: dict | None = None, diagnostics=None):
        return cls(REFUTED, None, dict(evidence or {}), witness, list(diagnostics or []))

    @classmethod
    def inconclusive(cls, diagnostics, evidence: dict | None = None):
        return cls(INCONCLUSIVE, None, dict(evidence or {}), None, list(diagnostics))

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.kind]

    @property
    def caveat(self) -> str | None:
        return CAVEAT if self.kind == CERTIFIED else None

    def summary(self) -> str:
        if self.kind == CERTIFIED:
            return f"Certified ({self.theorem}); {CAVEAT}"
        if self.kind == REFUTED:
            kind = self.witness.get("kind", "violation")
            return f"Refuted: {kind} {self.witness.get('points', '')}".rstrip()
        return "Inconclusive: " + ("; ".join(str(d) for d in self.diagnostics[:3]) or "no decision")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "theorem": self.theorem,
            "caveat": self.caveat,
            "witness": self.witness,
            "evidence": self.evidence,
            "diagnostics": list(self.diagnostics),
        }
