"""Energy-level chords of the rotating-frame Hamiltonian between cotangent fibers."""
__version__ = "0.1.0"
