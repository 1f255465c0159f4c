from __future__ import annotations

import enum


class Activity(enum.Enum):
    """Maintenance activity; declaration order is the tie-break order."""

    ADAPTIVE = "a"
    CORRECTIVE = "c"
    PERFECTIVE = "p"

    @property
    def index(self) -> int:
        return ACTIVITIES.index(self)

    @classmethod
    def parse(cls, value: "str | Activity") -> "Activity":
        if isinstance(value, Activity):
            return value
        text = str(value).strip().lower()
        for member in cls:
            if text in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown activity label {value!r}; expected one of a, c, p")


ACTIVITIES: tuple[Activity, ...] = tuple(Activity)
