import numpy as np
import pytest

from sscm.channel import CarrierConfig, ChannelSample, TimeDomainChannel, to_frequency_domain
from sscm.generate import LspSet

# Four parameter sets (lg seconds, lg degrees, dB). ASA copies ASD and the
# cluster rate is fixed at 10 so the sets can drive generation.
REFERENCE_SETS = {
    "A": LspSet(-7.6, 0.7, 1.26, 0.3, 1.26, 0.3, 10.0, 4.0, 10.0, True),
    "B": LspSet(-6.8, 0.675, 0.7, 0.25, 0.7, 0.25, 8.0, 3.0, 10.0, True),
    "C": LspSet(-6.0, 0.65, 1.6, 0.28, 1.6, 0.28, 7.0, 4.0, 10.0, True),
    "D": LspSet(-6.6, 0.66, 0.75, 0.24, 0.75, 0.24, 8.3, 2.8, 10.0, True),
}

# Lines collected by the acceptance module and echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def reference_sets():
    return dict(REFERENCE_SETS)


def tapped_sample(taps: dict[int, float], n_rx=2, n_tx=2, n_sc=64, carrier=CarrierConfig()) -> ChannelSample:
    """Channel whose per-antenna impulse response has the given tap powers."""
    h_t = np.zeros((n_rx, n_tx, n_sc), dtype=complex)
    for k, p in taps.items():
        h_t[:, :, k] = np.sqrt(p)
    return to_frequency_domain(TimeDomainChannel(h_t, carrier))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
