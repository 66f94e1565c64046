# Flux Sense
# Kitaev phase estimation of magnetic flux with single and entangled qubits
__version__ = "1.0.0"
