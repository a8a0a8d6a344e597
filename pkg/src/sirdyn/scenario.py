"""Scenario files: versioned JSON descriptions of a single model run.

A scenario selects exactly one model kind (scalar, threshold, network),
its parameters, the initial condition, the horizon and optional step
control overrides. Validation is strict: unknown fields are rejected by
dotted path so typos surface instead of being silently ignored. The
normalized form fills every default, which makes the scenario echo in a
run report complete and byte-deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .integrate import StepControl
from .network import ContactGraph, NetworkModel, NetworkState
from .scalar import DEFAULT_EXTINCTION, RateFunction, ScalarModel
from .threshold import ThresholdPolicy

SCHEMA_VERSION = 1
DEFAULT_HORIZON = 100.0

_CONTROL_FIELDS = {
    "initial_step": float,
    "max_step": float,
    "abs_tol": float,
    "rel_tol": float,
    "max_steps": int,
}

__all__ = ["Scenario", "ScenarioError", "SCHEMA_VERSION", "DEFAULT_HORIZON"]


class ScenarioError(ValueError):
    """Scenario parsing or validation failure, with field diagnostics."""


def _check_keys(mapping: dict, path: str, allowed: set[str], required: set[str]):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ScenarioError(f"unknown field(s) at {path}: {', '.join(unknown)}")
    missing = sorted(required - set(mapping))
    if missing:
        raise ScenarioError(f"missing required field(s) at {path}: {', '.join(missing)}")


def _number(mapping: dict, path: str, key: str, default=None):
    if key not in mapping:
        return default
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"field {path}.{key} must be a number, got {v!r}")
    return float(v)


@dataclass
class Scenario:
    """A validated, normalized scenario."""

    data: dict

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def horizon(self) -> float:
        return self.data["horizon"]

    @property
    def extinction(self) -> float:
        return self.data["extinction_threshold"]

    @property
    def output(self) -> dict:
        return self.data["output"]

    def control(self) -> StepControl:
        c = self.data["control"]
        return StepControl(
            initial_step=c["initial_step"],
            max_step=c["max_step"],
            abs_tol=c["abs_tol"],
            rel_tol=c["rel_tol"],
            max_steps=c["max_steps"],
        )

    def canonical(self) -> dict:
        return json.loads(json.dumps(self.data, sort_keys=True))

    def canonical_text(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)

    # -- model builders -------------------------------------------------

    def scalar_model(self) -> ScalarModel:
        m = self.data["model"]
        if m["family"] == "constant":
            rate = RateFunction.constant(m["beta"])
        else:
            rate = RateFunction.power(m["beta"], m["exponent"])
        return ScalarModel(rate, m["gamma"])

    def policy(self) -> ThresholdPolicy:
        m = self.data["model"]
        return ThresholdPolicy(
            beta=m["beta"],
            beta_bar=m["beta_bar"],
            threshold=m["threshold"],
            gamma=m["gamma"],
        )

    def network_model(self) -> NetworkModel:
        m = self.data["model"]
        return NetworkModel(
            ContactGraph(np.array(m["weights"], dtype=float)),
            beta=m["beta"],
            gamma=m["gamma"],
        )

    def initial_xy(self) -> tuple[float, float]:
        init = self.data["initial"]
        if "eps" in init:
            return 1.0 - init["eps"], init["eps"]
        return init["x"], init["y"]

    def network_initial(self) -> NetworkState:
        init = self.data["initial"]
        if "eps" in init:
            return NetworkState.seeded(init["eps"], n=init["n"], node=init["node"])
        x = np.array(init["x"], dtype=float)
        y = np.array(init["y"], dtype=float)
        return NetworkState(x, y, 1.0 - x - y)

    # -- construction ---------------------------------------------------

    @classmethod
    def from_file(cls, path: str | Path) -> "Scenario":
        text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        if not isinstance(raw, dict):
            raise ScenarioError("scenario must be a JSON object")
        _check_keys(
            raw,
            "scenario",
            allowed={
                "schema",
                "kind",
                "model",
                "initial",
                "horizon",
                "control",
                "extinction_threshold",
                "output",
            },
            required={"schema", "kind", "model", "initial"},
        )
        if raw["schema"] != SCHEMA_VERSION:
            raise ScenarioError(
                f"unsupported schema {raw['schema']!r}; this build reads schema {SCHEMA_VERSION}"
            )
        kind = raw["kind"]
        if kind not in ("scalar", "threshold", "network"):
            raise ScenarioError(f"kind must be scalar|threshold|network, got {kind!r}")

        model = _validate_model(kind, raw["model"])
        initial = _validate_initial(kind, raw["initial"], model)

        horizon = _number(raw, "scenario", "horizon", DEFAULT_HORIZON)
        if horizon is None or horizon <= 0:
            raise ScenarioError("horizon must be a positive number")
        extinction = _number(raw, "scenario", "extinction_threshold", DEFAULT_EXTINCTION)
        if extinction is None or extinction <= 0:
            raise ScenarioError("extinction_threshold must be positive")

        control_raw = raw.get("control", {})
        if not isinstance(control_raw, dict):
            raise ScenarioError("field scenario.control must be an object")
        _check_keys(control_raw, "control", allowed=set(_CONTROL_FIELDS), required=set())
        defaults = StepControl()
        control = {
            "initial_step": defaults.initial_step,
            "max_step": defaults.max_step,
            "abs_tol": defaults.abs_tol,
            "rel_tol": defaults.rel_tol,
            "max_steps": defaults.max_steps,
        }
        for key, value in control_raw.items():
            caster = _CONTROL_FIELDS[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(f"field control.{key} must be a number")
            control[key] = caster(value)

        output_raw = raw.get("output", {})
        if not isinstance(output_raw, dict):
            raise ScenarioError("field scenario.output must be an object")
        _check_keys(output_raw, "output", allowed={"trajectory", "events"}, required=set())
        output = {"trajectory": True, "events": True}
        for key, value in output_raw.items():
            if not isinstance(value, bool):
                raise ScenarioError(f"field output.{key} must be a boolean")
            output[key] = value

        data = {
            "schema": SCHEMA_VERSION,
            "kind": kind,
            "model": model,
            "initial": initial,
            "horizon": horizon,
            "extinction_threshold": extinction,
            "control": control,
            "output": output,
        }
        scenario = cls(data)
        # Constructing the model objects runs the domain validations.
        try:
            if kind == "scalar":
                scenario.scalar_model()
            elif kind == "threshold":
                scenario.policy()
            else:
                scenario.network_model()
                scenario.network_initial()
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"invalid {kind} parameters: {exc}") from exc
        return scenario


def _validate_model(kind: str, model) -> dict:
    if not isinstance(model, dict):
        raise ScenarioError("field scenario.model must be an object")
    if kind == "scalar":
        _check_keys(
            model,
            "model",
            allowed={"beta", "gamma", "family", "exponent"},
            required={"beta", "gamma", "family"},
        )
        family = model["family"]
        if family not in ("constant", "power"):
            raise ScenarioError(f"model.family must be constant|power, got {family!r}")
        out = {
            "beta": _number(model, "model", "beta"),
            "gamma": _number(model, "model", "gamma"),
            "family": family,
        }
        if family == "power":
            if "exponent" not in model:
                raise ScenarioError("missing required field(s) at model: exponent")
            out["exponent"] = _number(model, "model", "exponent")
        elif "exponent" in model:
            raise ScenarioError("model.exponent is only valid for the power family")
        return out
    if kind == "threshold":
        _check_keys(
            model,
            "model",
            allowed={"beta", "beta_bar", "threshold", "gamma"},
            required={"beta", "beta_bar", "threshold", "gamma"},
        )
        return {k: _number(model, "model", k) for k in ("beta", "beta_bar", "threshold", "gamma")}
    # network
    _check_keys(
        model,
        "model",
        allowed={"beta", "gamma", "weights"},
        required={"beta", "gamma", "weights"},
    )
    weights = model["weights"]
    if not isinstance(weights, list) or not all(isinstance(r, list) for r in weights):
        raise ScenarioError("model.weights must be a list of rows")
    n = len(weights)
    if n == 0 or any(len(r) != n for r in weights):
        raise ScenarioError("model.weights must be a nonempty square matrix")
    for i, row in enumerate(weights):
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ScenarioError(f"model.weights[{i}][{j}] must be a number")
    return {
        "beta": _number(model, "model", "beta"),
        "gamma": _number(model, "model", "gamma"),
        "weights": [[float(v) for v in row] for row in weights],
    }


def _validate_initial(kind: str, init, model: dict) -> dict:
    if not isinstance(init, dict):
        raise ScenarioError("field scenario.initial must be an object")
    if kind in ("scalar", "threshold"):
        if "eps" in init:
            _check_keys(init, "initial", allowed={"eps"}, required={"eps"})
            eps = _number(init, "initial", "eps")
            if not 0.0 <= eps < 1.0:
                raise ScenarioError("initial.eps must lie in [0, 1)")
            return {"eps": eps}
        _check_keys(init, "initial", allowed={"x", "y"}, required={"x", "y"})
        x = _number(init, "initial", "x")
        y = _number(init, "initial", "y")
        if x < 0 or y < 0 or x + y > 1.0 + 1e-12:
            raise ScenarioError("initial.x and initial.y must be nonnegative with x+y <= 1")
        return {"x": x, "y": y}
    # network
    n = len(model["weights"])
    if "eps" in init:
        _check_keys(init, "initial", allowed={"eps", "node", "n"}, required={"eps"})
        eps = _number(init, "initial", "eps")
        node = init.get("node", 0)
        if not isinstance(node, int) or isinstance(node, bool):
            raise ScenarioError("initial.node must be an integer")
        size = init.get("n", n)
        if size != n:
            raise ScenarioError(f"initial.n={size} does not match the {n}-node weight matrix")
        if not 0 <= node < n:
            raise ScenarioError(f"initial.node={node} out of range for {n} nodes")
        if not 0.0 <= eps < 1.0:
            raise ScenarioError("initial.eps must lie in [0, 1)")
        return {"eps": eps, "node": node, "n": n}
    _check_keys(init, "initial", allowed={"x", "y"}, required={"x", "y"})
    x, y = init["x"], init["y"]
    if not isinstance(x, list) or not isinstance(y, list) or len(x) != n or len(y) != n:
        raise ScenarioError(f"initial.x and initial.y must be lists of length {n}")
    return {"x": [float(v) for v in x], "y": [float(v) for v in y]}
