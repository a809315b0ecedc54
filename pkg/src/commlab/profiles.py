"""Named builtin-registry profiles.

A task manifest picks one profile; the profile fixes which functions the
script may call and bakes in the channel parameters, so a submission can
use the channel but never reconfigure it.
"""

from __future__ import annotations

from . import baselib, commsim, stopwait
from .commsim import ChannelModel
from .interpreter import BuiltinRegistry

_CHANNELS = {
    # shipped default: mild lowpass with light noise
    "default": ChannelModel(a=0.5, d=0, sigma=0.05),
    # stronger memory, noiseless: step-response and eye-diagram work
    "isi-a07": ChannelModel(a=0.7, d=0, sigma=0.0),
    # noiseless half-memory channel for equalizer training
    "eq-a05": ChannelModel(a=0.5, d=0, sigma=0.0),
    # noticeably noisy channel for the noise and error-rate labs
    "noisy-a05-s01": ChannelModel(a=0.5, d=0, sigma=0.1),
}

_cache: dict[str, BuiltinRegistry] = {}


def profile_names() -> list[str]:
    return sorted(list(_CHANNELS) + ["stopwait"])


def channel_for(name: str) -> ChannelModel | None:
    return _CHANNELS.get(name)


def get_profile(name: str) -> BuiltinRegistry:
    """Shared registry instance for a profile name; KeyError when unknown.

    Registries are immutable after assembly, so sharing across concurrent
    executions is safe.
    """
    if name in _cache:
        return _cache[name]
    registry = BuiltinRegistry()
    baselib.register(registry)
    if name == "stopwait":
        stopwait.register(registry)
    elif name in _CHANNELS:
        commsim.register(registry, _CHANNELS[name])
    else:
        raise KeyError(f"unknown builtin profile {name!r}")
    _cache[name] = registry
    return registry
