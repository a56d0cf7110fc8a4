"""Scenario files: the JSON surface of the laboratory.

A scenario bundles an operator, a covector grid, a forcing battery, solver
and verifier parameters, and the optional probe / second-order example
sections.  Validation is schema-driven; violations are reported with their
JSON-pointer path.  Fixed seed plus fixed worker count reproduces every
derived object bit for bit.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .coeffs import ForcingSpec, ForcingTerm
from .energy import XiGrid, build_xi_grid
from .errors import ScenarioError
from .modes import LOWER_END, UPPER_END, ModeProblem
from .operators import ModelOperator, PolySymbol, PolyTerm
from .wellposed import SecondOrderExample, zero_coefficient

_COEFF_SPEC_SCHEMA = {
    "type": "object",
    "required": ["degree", "terms"],
    "additionalProperties": False,
    "properties": {
        "degree": {"type": "integer", "minimum": 0},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["xi"],
                "additionalProperties": False,
                "properties": {
                    "xi": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "t_poly": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    "x_poly": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["coeff", "exponents"],
                            "additionalProperties": False,
                            "properties": {
                                "coeff": {"type": "number"},
                                "exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                            },
                        },
                    },
                },
            },
        },
    },
}

_POLY2_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["re"],
        "additionalProperties": False,
        "properties": {
            "t_exp": {"type": "integer", "minimum": 0},
            "x_exp": {"type": "integer", "minimum": 0},
            "re": {"type": "number"},
            "im": {"type": "number"},
        },
    },
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "n"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "interval": {
            "type": "object",
            "required": ["t", "T"],
            "additionalProperties": False,
            "properties": {"t": {"type": "number", "minimum": 0}, "T": {"type": "number", "maximum": 1.0}},
        },
        "operator": {
            "type": "object",
            "required": ["a2"],
            "additionalProperties": False,
            "properties": {
                "delta0": {"type": "number", "minimum": 0},
                "a1": _COEFF_SPEC_SCHEMA,
                "a2": _COEFF_SPEC_SCHEMA,
                "a3": _COEFF_SPEC_SCHEMA,
                "b": _COEFF_SPEC_SCHEMA,
                "B1": _COEFF_SPEC_SCHEMA,
                "C1": _COEFF_SPEC_SCHEMA,
            },
        },
        "xi_grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "octaves": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "per_octave": {"type": "integer", "minimum": 1},
                "directions": {"type": "integer", "minimum": 2},
            },
        },
        "battery": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "members": {"type": "integer", "minimum": 1},
                "degree": {"type": "integer", "minimum": 0},
                "omega_max": {"type": "number", "minimum": 0},
                "envelope_decay": {"type": "number", "minimum": 0},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "lambda": {
                    "type": "object",
                    "required": ["lo", "hi", "count"],
                    "additionalProperties": False,
                    "properties": {
                        "lo": {"type": "number", "exclusiveMinimum": 0},
                        "hi": {"type": "number"},
                        "count": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rtol": {"type": "number"},
                "atol": {"type": "number"},
                "dense": {"type": "integer", "minimum": 16},
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "n_t": {"type": "integer", "minimum": 2},
                "n_dir": {"type": "integer", "minimum": 2},
            },
        },
        "probe": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "octaves": {"type": "integer", "minimum": 8},
                "direction": {"type": "array", "items": {"type": "number"}},
            },
        },
        "second_order": {
            "type": "object",
            "required": ["a"],
            "additionalProperties": False,
            "properties": {
                "a": _POLY2_SCHEMA,
                "b0": _POLY2_SCHEMA,
                "b1": _POLY2_SCHEMA,
                "c": _POLY2_SCHEMA,
                "z0": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
    },
}


def _poly2_from_json(items) -> PolySymbol:
    if not items:
        return zero_coefficient()
    terms = tuple(
        PolyTerm(
            complex(float(it.get("re", 0.0)), float(it.get("im", 0.0))),
            int(it.get("t_exp", 0)),
            (int(it.get("x_exp", 0)),),
            0,
            (0,),
        )
        for it in items
    )
    return PolySymbol(1, terms)


@dataclass
class Scenario:
    raw: dict
    path: str = ""

    # -- loading -----------------------------------------------------------

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"/: cannot read scenario: {exc}") from exc
        return cls.from_dict(raw, path=str(path))

    @classmethod
    def from_dict(cls, raw: dict, path: str = "") -> "Scenario":
        validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
        errors = sorted(validator.iter_errors(raw), key=lambda e: e.json_path)
        if errors:
            err = errors[0]
            pointer = "/" + "/".join(str(p) for p in err.absolute_path)
            raise ScenarioError(f"{pointer}: {err.message}")
        scenario = cls(raw=raw, path=path)
        scenario._check_semantics()
        return scenario

    def _check_semantics(self):
        t0, t1 = self.interval
        if not (0.0 <= t0 < t1 <= 1.0):
            raise ScenarioError("/interval: must satisfy 0 <= t < T <= 1")
        if "operator" in self.raw:
            try:
                self.operator()
            except ValueError as exc:
                raise ScenarioError(f"/operator: {exc}") from exc

    # -- accessors -----------------------------------------------------------

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def n(self) -> int:
        return int(self.raw["n"])

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def interval(self) -> tuple[float, float]:
        iv = self.raw.get("interval", {"t": 0.0, "T": 1.0})
        return float(iv["t"]), float(iv["T"])

    def solver_params(self) -> dict:
        sv = self.raw.get("solver", {})
        return {
            "rtol": float(sv.get("rtol", 1e-10)),
            "atol": float(sv.get("atol", 1e-12)),
            "dense_n": int(sv.get("dense", 2048)),
        }

    def canonical_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def operator(self) -> ModelOperator:
        if "operator" not in self.raw:
            raise ScenarioError("/operator: section required by this subcommand")
        data = dict(self.raw["operator"])
        data["n"] = self.n
        return ModelOperator.from_json(data)

    def xi_grid(self) -> XiGrid:
        g = self.raw.get("xi_grid", {})
        octaves = tuple(g.get("octaves", (0, 5)))
        return build_xi_grid(
            self.n,
            octaves=octaves,
            per_octave=int(g.get("per_octave", 1)),
            directions=int(g.get("directions", 4)),
        )

    def lambda_grid(self) -> np.ndarray:
        v = self.raw.get("verify", {}).get("lambda", {"lo": 1.0, "hi": 512.0, "count": 10})
        return np.geomspace(float(v["lo"]), float(v["hi"]), int(v["count"]))

    def n_list(self) -> list[int]:
        return [int(v) for v in self.raw.get("verify", {}).get("N", [4, 8, 16, 24])]

    # -- battery ---------------------------------------------------------------

    def battery_forcing(self, member: int, mode_index: int, xi) -> ForcingSpec:
        """Deterministic random forcing for one battery slot: a low-degree
        complex polynomial with oscillation, damped by a <xi>-envelope."""
        b = self.raw.get("battery", {})
        degree = int(b.get("degree", 2))
        omega_max = float(b.get("omega_max", 3.0))
        decay = float(b.get("envelope_decay", 1.0))
        rng = np.random.default_rng([self.seed, 101, member, mode_index])
        envelope = (1.0 + float(np.sum(np.asarray(xi) ** 2))) ** (-decay)
        terms = []
        for p in range(degree + 1):
            coeff = envelope * complex(rng.normal(), rng.normal())
            omega = float(rng.uniform(-omega_max, omega_max))
            terms.append(ForcingTerm(coeff, p, omega))
        return ForcingSpec(tuple(terms))

    def battery_members(self) -> int:
        return int(self.raw.get("battery", {}).get("members", 3))

    def battery_problems(self, direction: str = "forward") -> list[list[ModeProblem]]:
        """One list of ModeProblems per battery member, aligned with the
        xi grid; zero data at the endpoint matching the direction."""
        op = self.operator()
        grid = self.xi_grid()
        t0, t1 = self.interval
        site = LOWER_END if direction == "forward" else UPPER_END
        battery = []
        for m in range(self.battery_members()):
            member = [
                ModeProblem(
                    op=op,
                    xi=pt,
                    forcing=self.battery_forcing(m, q, pt),
                    t0=t0,
                    T=t1,
                    data_site=site,
                    data=(0.0, 0.0, 0.0),
                    label=f"member{m}/mode{q}",
                )
                for q, pt in enumerate(grid.points)
            ]
            battery.append(member)
        return battery

    # -- optional sections -------------------------------------------------------

    def second_order_example(self) -> SecondOrderExample:
        if "second_order" not in self.raw:
            raise ScenarioError("/second_order: section required by this subcommand")
        sec = self.raw["second_order"]
        return SecondOrderExample(
            a=_poly2_from_json(sec["a"]),
            b0=_poly2_from_json(sec.get("b0", [])),
            b1=_poly2_from_json(sec.get("b1", [])),
            c=_poly2_from_json(sec.get("c", [])),
            z0=tuple(sec.get("z0", (0.0, 0.0))),
        )

    def probe_params(self) -> dict:
        p = self.raw.get("probe", {})
        return {
            "octaves": int(p.get("octaves", 10)),
            "direction": np.asarray(p.get("direction", [1.0] + [0.0] * (self.n - 1)), dtype=float),
        }

    def scan_params(self) -> dict:
        s = self.raw.get("scan", {})
        return {
            "t_max": float(s.get("t_max", 0.1)),
            "n_t": int(s.get("n_t", 40)),
            "n_dir": int(s.get("n_dir", 16)),
        }
