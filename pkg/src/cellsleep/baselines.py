"""Reference controllers: everything ON, and a fixed nightly switch-off."""

from __future__ import annotations

from dataclasses import dataclass

from .simulator import ActionVector


def allon_controller():
    def controller(net, period, t_minutes):
        return ActionVector.all_on(net)
    controller.__name__ = "allon"
    return controller


@dataclass(frozen=True)
class NightScheduleConfig:
    off_start_minute: int = 60
    off_end_minute: int = 360

    def __post_init__(self):
        if not 0 <= self.off_start_minute < self.off_end_minute <= 1440:
            raise ValueError("night window needs 0 <= start < end <= 1440")

    def is_off(self, t_minutes: int) -> bool:
        minute = t_minutes % 1440
        return self.off_start_minute <= minute < self.off_end_minute


def night_schedule_controller(cfg: NightScheduleConfig = NightScheduleConfig()):
    """Capacity cells OFF for periods starting inside [start, end), else ON."""
    def controller(net, period, t_minutes):
        if cfg.is_off(t_minutes):
            return ActionVector.capacity_off(net)
        return ActionVector.all_on(net)
    controller.__name__ = "night"
    return controller
