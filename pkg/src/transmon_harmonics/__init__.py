"""Transmon spectra with Josephson harmonics.

Builds and diagonalizes charge-basis transmon and joint transmon-resonator
Hamiltonians whose junction potential contains higher cosine harmonics,
derives the harmonic amplitudes from mesoscopic transparency models, and
inverts measured spectroscopy data back to Hamiltonian parameters.

All energies are stored as E/h in GHz, so transition frequencies are plain
differences of eigenvalues.
"""

from transmon_harmonics.spectrum import (
    HarmonicsSet,
    TransmonConfig,
    ResonatorConfig,
    JointSystemConfig,
    DressedSpectrum,
    SpectrumPrediction,
    build_transmon_matrix,
    diagonalize_transmon,
    build_joint_hamiltonian,
    label_dressed_states,
    lambda_continuation_labels,
    predict_spectrum,
    potential,
    potential_height,
    cpr,
    critical_current,
    perturbative_freq_anharmonicity,
)

__all__ = [
    "HarmonicsSet",
    "TransmonConfig",
    "ResonatorConfig",
    "JointSystemConfig",
    "DressedSpectrum",
    "SpectrumPrediction",
    "build_transmon_matrix",
    "diagonalize_transmon",
    "build_joint_hamiltonian",
    "label_dressed_states",
    "lambda_continuation_labels",
    "predict_spectrum",
    "potential",
    "potential_height",
    "cpr",
    "critical_current",
    "perturbative_freq_anharmonicity",
]

__version__ = "0.1.0"
