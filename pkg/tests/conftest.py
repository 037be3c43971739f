import random

import pytest

from abekit import schemes as sch
from abekit.pairing import SecurityLevel, suite_init


@pytest.fixture(scope="session")
def suite80():
    return suite_init(SecurityLevel.S80)


@pytest.fixture(scope="session")
def cp80():
    """(params, master) for CP-ABE at the 80-bit level, fixed seed."""
    suite = suite_init(SecurityLevel.S80)
    return sch.cp_setup(suite, random.Random(0xC0FFEE))


@pytest.fixture(scope="session")
def kp80():
    """(params, master, universe) for KP-ABE at the 80-bit level."""
    suite = suite_init(SecurityLevel.S80)
    return sch.kp_setup(suite, random.Random(0xC0FFEE))
