"""Platform capability matrix, requirement queries and staged evaluation plans.

Ranking of eligible platforms is a toolkit convention (native count among
the required properties, then native count overall, then name). The
matrix itself expresses eligibility, not quality.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum, IntEnum
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import AdvisorError


class SupportLevel(IntEnum):
    Unsupported = 0
    Augmented = 1
    Native = 2

    @classmethod
    def parse(cls, text: str) -> SupportLevel:
        key = text.strip().lower()
        aliases = {
            "native": cls.Native, "✓": cls.Native, "n": cls.Native,
            "augmented": cls.Augmented, "△": cls.Augmented, "a": cls.Augmented,
            "unsupported": cls.Unsupported, "×": cls.Unsupported, "x": cls.Unsupported, "u": cls.Unsupported,
        }
        if key not in aliases:
            raise AdvisorError(f"unknown support level {text!r}; use native, augmented or unsupported")
        return aliases[key]

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class CapabilityMatrix:
    platforms: tuple[str, ...]
    properties: tuple[str, ...]
    cells: Mapping[tuple[str, str], SupportLevel]
    version: str = ""

    def __post_init__(self):
        if len(set(self.platforms)) != len(self.platforms):
            raise AdvisorError("duplicate platform names")
        if len(set(self.properties)) != len(self.properties):
            raise AdvisorError("duplicate property names")
        missing = [(pl, pr) for pr in self.properties for pl in self.platforms if (pl, pr) not in self.cells]
        if missing:
            raise AdvisorError(f"capability matrix incomplete: {len(missing)} missing cells, e.g. {missing[0]}")

    def resolve_property(self, name: str) -> str:
        """Exact name, else a unique case-insensitive prefix (``"Near-RT E2 loop"``)."""
        if name in self.properties:
            return name
        key = name.strip().lower()
        hits = [p for p in self.properties if p.lower().startswith(key)]
        if len(hits) == 1:
            return hits[0]
        if hits:
            raise AdvisorError(f"ambiguous property {name!r}; matches: " + "; ".join(hits))
        raise AdvisorError(
            f"unknown property {name!r}; valid properties: " + "; ".join(self.properties)
        )

    def resolve_platform(self, name: str) -> str:
        if name in self.platforms:
            return name
        hits = [p for p in self.platforms if p.lower() == name.strip().lower()]
        if len(hits) == 1:
            return hits[0]
        raise AdvisorError(f"unknown platform {name!r}; valid platforms: " + "; ".join(self.platforms))

    def cell(self, platform: str, prop: str) -> SupportLevel:
        return self.cells[(self.resolve_platform(platform), self.resolve_property(prop))]

    def native_count(self, platform: str, props: Iterable[str] | None = None) -> int:
        props = self.properties if props is None else props
        return sum(1 for p in props if self.cells[(platform, p)] is SupportLevel.Native)

    def to_csv(self) -> str:
        out = io.StringIO()
        if self.version:
            out.write(f"# capability matrix, dataset version {self.version}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["property", *self.platforms])
        for prop in self.properties:
            w.writerow([prop, *(self.cells[(pl, prop)].label for pl in self.platforms)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> CapabilityMatrix:
        version = ""
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                if "dataset version" in line:
                    version = line.split("dataset version", 1)[1].split()[0]
                continue
            if line.strip():
                body.append(line)
        rows = list(csv.reader(body))
        if not rows or rows[0][0] != "property":
            raise AdvisorError("capability CSV must start with a 'property' header row")
        platforms = tuple(rows[0][1:])
        properties, cells = [], {}
        for row in rows[1:]:
            if len(row) != len(platforms) + 1:
                raise AdvisorError(f"row {row[0]!r} has {len(row) - 1} cells, expected {len(platforms)}")
            properties.append(row[0])
            for pl, value in zip(platforms, row[1:]):
                cells[(pl, row[0])] = SupportLevel.parse(value)
        return cls(platforms, tuple(properties), cells, version)


def load_matrix() -> CapabilityMatrix:
    text = resources.files("ranforensics").joinpath("data/capability_matrix.csv").read_text()
    return CapabilityMatrix.from_csv(text)


@dataclass(frozen=True)
class RequirementQuery:
    requirements: tuple[tuple[str, SupportLevel], ...]

    @classmethod
    def build(cls, matrix: CapabilityMatrix, reqs: Iterable[tuple[str, SupportLevel | str]]) -> RequirementQuery:
        resolved = []
        seen = set()
        for prop, level in reqs:
            name = matrix.resolve_property(prop)
            if name in seen:
                raise AdvisorError(f"duplicate requirement on {name!r}")
            seen.add(name)
            resolved.append((name, level if isinstance(level, SupportLevel) else SupportLevel.parse(level)))
        return cls(tuple(resolved))

    @classmethod
    def parse(cls, matrix: CapabilityMatrix, specs: Iterable[str]) -> RequirementQuery:
        """CLI form: ``"WG4 7.2x fronthaul (HIL)=native"``."""
        pairs = []
        for spec in specs:
            prop, sep, level = spec.rpartition("=")
            if not sep:
                raise AdvisorError(f"requirement {spec!r} must look like '<property>=<level>'")
            pairs.append((prop, level))
        return cls.build(matrix, pairs)


def query(
    matrix: CapabilityMatrix, requirements: RequirementQuery | Sequence[tuple[str, SupportLevel | str]]
) -> list[str]:
    if not isinstance(requirements, RequirementQuery):
        requirements = RequirementQuery.build(matrix, requirements)
    reqs = requirements.requirements
    for prop, _ in reqs:
        if prop not in matrix.properties:
            matrix.resolve_property(prop)  # raises with the valid names
    required = [p for p, _ in reqs]
    eligible = [
        pl for pl in matrix.platforms
        if all(matrix.cells[(pl, prop)] >= level for prop, level in reqs)
    ]
    return sorted(
        eligible,
        key=lambda pl: (-matrix.native_count(pl, required), -matrix.native_count(pl), pl),
    )


class ClaimClass(str, Enum):
    NearRtControl = "NearRtControl"
    FullStackProtocol = "FullStackProtocol"
    RfExecution = "RfExecution"
    FronthaulTiming = "FronthaulTiming"
    OfflineAi = "OfflineAi"
    InRanAi = "InRanAi"
    PerTtiObservability = "PerTtiObservability"


@dataclass(frozen=True)
class Stage:
    environment: str
    rationale: str
    platforms: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProgressionPlan:
    claim_class: ClaimClass
    stages: tuple[Stage, ...]

    @property
    def environments(self) -> list[str]:
        return [s.environment for s in self.stages]

    def to_dict(self) -> dict:
        return {
            "claim_class": self.claim_class.value,
            "stages": [
                {"environment": s.environment, "rationale": s.rationale, "platforms": list(s.platforms)}
                for s in self.stages
            ],
        }


_NS = Stage("ns-O-RAN", "control-plane abstractions and large topologies at low iteration cost", ("ns-O-RAN",))
_EMU = Stage(
    "host-OS emulation",
    "protocol interactions over the full stack without RF; not real-time",
    ("OAI RFSim", "srsRAN ZMQ"),
)
_SDR = Stage("Split-8 SDR/HIL", "ordinary RF front-end execution", ("OAI-SDR", "srsRAN-SDR"))
_ORU = Stage(
    "O-RU/OFH",
    "native WG4 7.2x fronthaul: timing, synchronization and RU interoperability enter the claim",
    ("OAI-O-RU/OFH", "srsRAN-O-RU/OFH", "ACAR"),
)

_PLANS: dict[ClaimClass, tuple[Stage, ...]] = {
    ClaimClass.NearRtControl: (
        _NS,
        Stage("host-OS emulation", "native E2 exposure with a stable, repeatable iteration loop",
              ("srsRAN ZMQ", "OAI RFSim")),
    ),
    ClaimClass.FullStackProtocol: (
        Stage("host-OS emulation", "NR signalling and a working core-network path before OTA variability",
              ("OAI RFSim", "srsRAN ZMQ")),
        _SDR,
        _ORU,
    ),
    ClaimClass.RfExecution: (_EMU, _SDR),
    ClaimClass.FronthaulTiming: (_NS, _EMU, _SDR, _ORU),
    ClaimClass.OfflineAi: (
        Stage("Sionna PHY/SYS", "differentiable link-level training and dataset generation", ("Sionna",)),
        Stage("Sionna-RT", "ray-traced channels for site-specific data", ("Sionna-RT",)),
    ),
    ClaimClass.InRanAi: (
        Stage("Sionna", "offline differentiable design of the model", ("Sionna", "Sionna-RT")),
        Stage("AODT", "code-realistic twin sharing GPU kernels for debugging", ("AODT",)),
        Stage("ACAR", "GPU-native real-time O-DU with in-path inference", ("ACAR",)),
    ),
    ClaimClass.PerTtiObservability: (
        Stage("AODT", "per-TTI ledgers in a twin before live deployment", ("AODT",)),
        Stage("ACAR", "per-TTI observability under real slot deadlines", ("ACAR",)),
    ),
}


def progression(claim_class: ClaimClass | str) -> ProgressionPlan:
    try:
        cc = ClaimClass(claim_class)
    except ValueError:
        raise AdvisorError(
            f"unknown claim class {claim_class!r}; choose from {', '.join(c.value for c in ClaimClass)}"
        ) from None
    return ProgressionPlan(cc, _PLANS[cc])
