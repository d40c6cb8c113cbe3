from enum import Enum


class Status(str, Enum):
    SERVING = "serving"
    AWAY = "away"
    CHARGING = "charging"
    IDLE = "idle"
