"""Run configuration: JSON file <-> dataclasses, defaults from the apparatus."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import StageConfig
from .camera import CameraConfig, NoiseConfig
from .pathspace import NetworkConfig
from .pointerlab import DEFAULT_MARGIN, DEFAULT_SIGMA, FidelityMode


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisOptions:
    window_um: float | None = None
    margin: float = DEFAULT_MARGIN
    excited_threshold: int = 10
    presets: tuple = (0, 1, 2)


@dataclass(frozen=True)
class RunConfig:
    stage: StageConfig = field(default_factory=StageConfig)
    camera: CameraConfig = field(default_factory=lambda: CameraConfig(noise=NoiseConfig()))
    sigma: float = DEFAULT_SIGMA
    fidelity: FidelityMode = field(default_factory=FidelityMode.ideal)
    seed: int | None = 0
    output_dir: str = "out"
    network: NetworkConfig | None = None
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)

    def effective_camera(self) -> CameraConfig:
        """Camera with the run seed pushed into its noise stream."""
        if self.camera.noise is None or self.seed is None:
            return self.camera
        return self.camera.with_(noise=replace(self.camera.noise, seed=int(self.seed)))

    def to_dict(self) -> dict:
        cam = self.camera
        return {
            "stage": {
                "positions": list(self.stage.positions),
                "x_zero": self.stage.x_zero,
                "gain": self.stage.gain,
            },
            "camera": {
                "pixels": cam.pixels,
                "pitch": cam.pitch,
                "depth_max": cam.depth_max,
                "peak_level": cam.peak_level,
                "offset": cam.offset,
                "quantize": cam.quantize,
                "noise": None if cam.noise is None else {"electrons_per_count": cam.noise.electrons_per_count},
            },
            "pointer": {"sigma": self.sigma},
            "fidelity": self.fidelity.to_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "network": None if self.network is None else self.network.to_dict(),
            "analysis": {
                "window_um": self.analysis.window_um,
                "margin": self.analysis.margin,
                "excited_threshold": self.analysis.excited_threshold,
                "presets": list(self.analysis.presets),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = _expect_dict(data, "<root>")
        _reject_unknown(data, {"stage", "camera", "pointer", "fidelity", "seed", "output_dir", "network", "analysis"}, "")
        kw = {}
        try:
            if "stage" in data:
                st = _expect_dict(data["stage"], "stage")
                _reject_unknown(st, {"positions", "x_zero", "gain"}, "stage.")
                pos = st.get("positions")
                if isinstance(pos, dict):
                    _reject_unknown(pos, {"start", "stop", "count"}, "stage.positions.")
                    pos = tuple(np.linspace(float(pos["start"]), float(pos["stop"]), int(pos["count"])))
                sk = {}
                if pos is not None:
                    sk["positions"] = tuple(pos)
                if "x_zero" in st:
                    sk["x_zero"] = float(st["x_zero"])
                if "gain" in st:
                    sk["gain"] = float(st["gain"])
                kw["stage"] = StageConfig(**sk)
            if "camera" in data:
                cm = _expect_dict(data["camera"], "camera")
                _reject_unknown(
                    cm, {"pixels", "pitch", "depth_max", "peak_level", "offset", "quantize", "noise"}, "camera."
                )
                ck = {k: cm[k] for k in ("pixels", "depth_max", "peak_level") if k in cm}
                ck.update({k: float(cm[k]) for k in ("pitch", "offset") if k in cm})
                if "quantize" in cm:
                    ck["quantize"] = bool(cm["quantize"])
                if "noise" in cm:
                    nz = cm["noise"]
                    if nz is None:
                        ck["noise"] = None
                    else:
                        nz = _expect_dict(nz, "camera.noise")
                        _reject_unknown(nz, {"electrons_per_count"}, "camera.noise.")
                        ck["noise"] = NoiseConfig(**{k: float(v) for k, v in nz.items()})
                else:
                    ck["noise"] = NoiseConfig()
                kw["camera"] = CameraConfig(**ck)
            if "pointer" in data:
                pt = _expect_dict(data["pointer"], "pointer")
                _reject_unknown(pt, {"sigma"}, "pointer.")
                if "sigma" in pt:
                    kw["sigma"] = float(pt["sigma"])
                    if not kw["sigma"] > 0:
                        raise ConfigError("pointer.sigma: must be positive")
            if "fidelity" in data:
                kw["fidelity"] = FidelityMode.from_dict(_expect_dict(data["fidelity"], "fidelity"))
            if "seed" in data:
                kw["seed"] = None if data["seed"] is None else int(data["seed"])
            if "output_dir" in data:
                kw["output_dir"] = str(data["output_dir"])
            if data.get("network") is not None:
                kw["network"] = NetworkConfig.from_dict(_expect_dict(data["network"], "network"))
            if "analysis" in data:
                an = _expect_dict(data["analysis"], "analysis")
                _reject_unknown(an, {"window_um", "margin", "excited_threshold", "presets"}, "analysis.")
                ak = {}
                if "window_um" in an:
                    ak["window_um"] = None if an["window_um"] is None else float(an["window_um"])
                if "margin" in an:
                    ak["margin"] = float(an["margin"])
                if "excited_threshold" in an:
                    ak["excited_threshold"] = int(an["excited_threshold"])
                if "presets" in an:
                    presets = tuple(int(p) for p in an["presets"])
                    if len(presets) != 3 or any(p not in (0, 1, 2) for p in presets):
                        raise ConfigError("analysis.presets: need three class ids from {0, 1, 2}")
                    ak["presets"] = presets
                kw["analysis"] = AnalysisOptions(**ak)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        return cls(**kw)


def _expect_dict(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(d: dict, allowed: set, prefix: str):
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(prefix + k for k in unknown)}")


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
