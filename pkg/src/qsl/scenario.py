"""Declarative scenario configuration: JSON schema, parsing with field
diagnostics, byte-stable emission, and construction of the runtime objects.

Complex matrices serialize as JSON arrays of [re, im] pairs, row-major.
Hamiltonian schedules form a small catalogue: "constant" keeps the matrix
fixed; "ramp(r)" multiplies it by r*t.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import Generator
from .errors import ContractError
from .operators import DensityMatrix, HermitianOperator, PAULIS
from .tolerances import DEFAULT_TOL, ToleranceSet

_RAMP = re.compile(r"^ramp\((?P<rate>[-+0-9.eE]+)\)$")


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, complex)]


def matrix_from_json(obj, where: str) -> np.ndarray:
    try:
        rows = []
        for row in obj:
            rows.append([complex(float(pair[0]), float(pair[1])) for pair in row])
        m = np.array(rows, dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise ContractError(f"{where}: expected rows of [re, im] pairs ({exc})")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"{where}: matrix must be square, got shape {m.shape}")
    return m


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ContractError(f"{where}: missing field '{key}'")
    return d[key]


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario; ``emit`` -> ``parse`` -> ``emit`` is byte-identical."""

    name: str
    dim: int
    initial_bloch: Optional[tuple[float, float, float]]
    initial_matrix: Optional[np.ndarray]
    hamiltonian_matrix: Optional[np.ndarray]
    schedule: str
    channels: tuple[tuple[float, np.ndarray], ...]
    t_max: float
    steps: int
    observables: tuple[tuple[str, str, Optional[np.ndarray]], ...]  # (name, kind, matrix)
    outputs: tuple[str, ...]
    tolerance_overrides: tuple[tuple[str, float], ...]
    seed: int

    @staticmethod
    def parse(text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ContractError(f"config: invalid JSON at line {exc.lineno}, "
                                f"column {exc.colno}: {exc.msg}")
        if not isinstance(data, dict):
            raise ContractError("config: top level must be an object")
        name = str(_require(data, "name", "config"))
        dim = int(_require(data, "dim", "config"))
        if dim < 2:
            raise ContractError("config.dim: must be at least 2")

        init = _require(data, "initial_state", "config")
        bloch = None
        init_m = None
        if "bloch" in init:
            if dim != 2:
                raise ContractError("config.initial_state.bloch: needs dim = 2")
            bloch = tuple(float(v) for v in init["bloch"])
            if len(bloch) != 3:
                raise ContractError("config.initial_state.bloch: needs [x, y, z]")
        elif "matrix" in init:
            init_m = matrix_from_json(init["matrix"], "config.initial_state.matrix")
            if init_m.shape[0] != dim:
                raise ContractError("config.initial_state.matrix: wrong dimension")
        else:
            raise ContractError("config.initial_state: needs 'bloch' or 'matrix'")

        h_m = None
        schedule = "constant"
        if data.get("hamiltonian") is not None:
            h = data["hamiltonian"]
            h_m = matrix_from_json(_require(h, "matrix", "config.hamiltonian"),
                                   "config.hamiltonian.matrix")
            if h_m.shape[0] != dim:
                raise ContractError("config.hamiltonian.matrix: wrong dimension")
            HermitianOperator(h_m)  # validated on load
            schedule = str(h.get("schedule", "constant"))
            if schedule != "constant" and not _RAMP.match(schedule):
                raise ContractError(
                    f"config.hamiltonian.schedule: unknown schedule {schedule!r}")

        channels = []
        for i, ch in enumerate(data.get("channels", [])):
            where = f"config.channels[{i}]"
            rate = float(_require(ch, "rate", where))
            if rate < 0:
                raise ContractError(f"{where}.rate: must be nonnegative")
            m = matrix_from_json(_require(ch, "matrix", where), f"{where}.matrix")
            if m.shape[0] != dim:
                raise ContractError(f"{where}.matrix: wrong dimension")
            channels.append((rate, m))

        t_max = float(_require(data, "t_max", "config"))
        steps = int(_require(data, "steps", "config"))
        if steps < 2:
            raise ContractError("config.steps: must be at least 2")

        observables = []
        for i, ob in enumerate(_require(data, "observables", "config")):
            where = f"config.observables[{i}]"
            oname = str(_require(ob, "name", where))
            if "pauli" in ob:
                token = str(ob["pauli"])
                if token not in PAULIS:
                    raise ContractError(f"{where}.pauli: unknown token {token!r}")
                if dim != 2:
                    raise ContractError(f"{where}.pauli: needs dim = 2")
                observables.append((oname, token, None))
            elif "matrix" in ob:
                m = matrix_from_json(ob["matrix"], f"{where}.matrix")
                if m.shape[0] != dim:
                    raise ContractError(f"{where}.matrix: wrong dimension")
                HermitianOperator(m)  # validated on load
                observables.append((oname, "matrix", m))
            else:
                raise ContractError(f"{where}: needs 'pauli' or 'matrix'")
        if not observables:
            raise ContractError("config.observables: must not be empty")

        known_outputs = ("speed", "integrated", "entropy", "basis")
        outputs = tuple(str(o) for o in data.get("outputs", ["speed", "integrated"]))
        for o in outputs:
            if o not in known_outputs:
                raise ContractError(f"config.outputs: unknown kind {o!r}")

        overrides = []
        tol_names = {f.name for f in dataclasses.fields(ToleranceSet)}
        for k, v in (data.get("tolerances") or {}).items():
            if k not in tol_names:
                raise ContractError(f"config.tolerances: unknown tolerance {k!r}")
            overrides.append((str(k), float(v)))

        return ScenarioConfig(
            name=name, dim=dim, initial_bloch=bloch, initial_matrix=init_m,
            hamiltonian_matrix=h_m, schedule=schedule, channels=tuple(channels),
            t_max=t_max, steps=steps, observables=tuple(observables),
            outputs=outputs, tolerance_overrides=tuple(overrides),
            seed=int(data.get("seed", 0)))

    def to_json_dict(self) -> dict:
        out: dict = {"name": self.name, "dim": self.dim}
        if self.initial_bloch is not None:
            out["initial_state"] = {"bloch": list(self.initial_bloch)}
        else:
            out["initial_state"] = {"matrix": matrix_to_json(self.initial_matrix)}
        if self.hamiltonian_matrix is not None:
            out["hamiltonian"] = {"matrix": matrix_to_json(self.hamiltonian_matrix),
                                  "schedule": self.schedule}
        out["channels"] = [{"rate": rate, "matrix": matrix_to_json(m)}
                           for rate, m in self.channels]
        out["t_max"] = self.t_max
        out["steps"] = self.steps
        obs = []
        for oname, kind, m in self.observables:
            if kind == "matrix":
                obs.append({"name": oname, "matrix": matrix_to_json(m)})
            else:
                obs.append({"name": oname, "pauli": kind})
        out["observables"] = obs
        out["outputs"] = list(self.outputs)
        if self.tolerance_overrides:
            out["tolerances"] = {k: v for k, v in self.tolerance_overrides}
        out["seed"] = self.seed
        return out

    def emit(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def tolerances(self, base: ToleranceSet = DEFAULT_TOL) -> ToleranceSet:
        if not self.tolerance_overrides:
            return base
        return dataclasses.replace(base, **dict(self.tolerance_overrides))

    def initial_state(self, tol: ToleranceSet = DEFAULT_TOL) -> DensityMatrix:
        if self.initial_bloch is not None:
            return DensityMatrix.from_bloch(*self.initial_bloch, tol=tol)
        return DensityMatrix(self.initial_matrix, tol)

    def generator(self) -> Generator:
        h = self.hamiltonian_matrix
        if h is None:
            return Generator(None, self.channels, dim=self.dim)
        m = _RAMP.match(self.schedule)
        if m:
            rate = float(m.group("rate"))
            h0 = h.copy()
            return Generator(lambda t: rate * t * h0, self.channels, dim=self.dim)
        return Generator(h, self.channels, dim=self.dim)

    def observable_operators(self) -> list[tuple[str, HermitianOperator]]:
        out = []
        for oname, kind, m in self.observables:
            if kind == "matrix":
                out.append((oname, HermitianOperator(m)))
            else:
                out.append((oname, HermitianOperator(PAULIS[kind])))
        return out
