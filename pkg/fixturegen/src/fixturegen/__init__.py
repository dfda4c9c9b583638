"""One-shot generator for electronic-structure test fixtures.

Produces FCIDUMP integral files plus JSON sidecars (geometry, SCF energy, FCI
energy, provenance) for small molecular systems in a minimal basis, using an
in-package McMurchie-Davidson integral engine, restricted Hartree-Fock, and a
string-based FCI."""

from .fci import fci_ground_energy
from .generate import GeometrySpec, builtin_systems, generate
from .scf import ScfConvergenceError, run_rhf

__version__ = "0.1.0"
