"""beaconlab: a desk-scale protocol-security laboratory for the beacon
chain's cryptographic components.

Subpackages cover the BLS signature layer with aggregation and batch
verification (plus the attacks that motivate its security checks),
slashing protection with the JSON interchange format, the Noise XX and
discv5 handshakes with hardened variants, and a deterministic adversarial
network simulator that exercises all of them.
"""

from .suites import Bls12381Suite, ToySuite

__all__ = ["Bls12381Suite", "ToySuite"]
__version__ = "0.1.0"
