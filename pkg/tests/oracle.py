"""Hand arithmetic from the default hardware constants, independent of the package.

Used to derive the frozen numbers in the power and solver tests.
"""

CPU = (3.6, 130.0)
MEM = (32.0, 11.85)
STO = (320.0, 6.19)
DYNAMIC = 0.30
TOR_IDLE = 312.0
NCH_EPB = 1.4e-9
ONBOARD_EPB = 0.1e-12


def active_watts(capacity: float, peak: float, load: float) -> float:
    return (1 - DYNAMIC) * peak + DYNAMIC * peak * load / capacity


def dynamic_watts(capacity: float, peak: float, load: float) -> float:
    return DYNAMIC * peak * load / capacity


def colocated_app_power(cpu: float, mem: float, sto: float) -> float:
    return active_watts(*CPU, cpu) + active_watts(*MEM, mem) + active_watts(*STO, sto)


if __name__ == "__main__":
    print("cpu at 2.7 GHz", active_watts(*CPU, 2.7))
    print("app (2.7, 32, 240) compute", colocated_app_power(2.7, 32, 240))
    print("onboard 600 Gb/s", ONBOARD_EPB * 600e9)
    print("nch 500 Gb/s both ends", 2 * NCH_EPB * 500e9)
    floor = (
        dynamic_watts(*CPU, 0.9) + dynamic_watts(*MEM, 3.6) + dynamic_watts(*STO, 80)
        + ONBOARD_EPB * 305e9
    )
    print("empty prefix plus one floor", TOR_IDLE + floor)
