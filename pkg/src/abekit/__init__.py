"""abekit: attribute-based encryption toolkit for IoT-class workloads.

Instrumented Type-1 pairing suite, CP-ABE and KP-ABE key encapsulation,
a monotone policy compiler with bag-of-bits numeric comparisons, a
hybrid KEM-DEM container, a benchmark harness with an energy model, and
a healthcare telemetry simulator.
"""

from .access_tree import (AccessTree, AttributeBag, SatisfactionWitness,
                          compile_cmp, compile_policy, compile_text,
                          expand_numeric, lagrange_coeff, min_width,
                          satisfies, share_secret, witness_coefficients)
from .bench import (BenchConfig, BenchRecord, DEVICE_PROFILES, DeviceProfile,
                    estimate_energy, linear_fit, profile_breakdown, run_bench,
                    summarize)
from .container import (SealedContainer, dem_key_for, open_container, seal,
                        seal_kp)
from .errors import (AbeError, AuthenticationFailure, DeserializationError,
                     PolicyError, PolicyNotSatisfied, PolicySyntaxError,
                     ThresholdError, UnknownAttribute, UnsatisfiablePolicy)
from .pairing import (GroupElement, OpCounters, PairingSuite, SecurityLevel,
                      suite_init)
from .policy import Atom, Gate, NumericCmp, parse_policy, print_policy
from .schemes import (CpCiphertext, CpMasterKey, CpPublicParams, CpSecretKey,
                      KpCiphertext, KpKey, KpMasterKey, KpPublicParams,
                      KpUniverse, cp_decrypt, cp_encrypt, cp_keygen, cp_setup,
                      kp_decrypt, kp_encrypt, kp_keygen, kp_register, kp_setup)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
