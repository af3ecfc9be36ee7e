#pragma once

namespace channelion::constants {

// Lengths in nm, energies in eV, times in s.
inline constexpr double kCoulombE2 = 1.439964;        // e^2/(4 pi eps0), eV nm
inline constexpr double kBohrRadius = 0.0529177;      // nm
inline constexpr double kHbar = 6.582119569e-16;      // eV s
inline constexpr double kProtonMassEnergy = 938.272e6;  // eV
inline constexpr double kSpeedOfLight = 2.99792458e17;  // nm/s
inline constexpr double kBohrMagneton = 5.7883818060e-5;  // eV/T

inline constexpr double kPi = 3.14159265358979323846;

// Spin constants.
inline constexpr double kElectronG = 2.0023;
inline constexpr double kGammaH = 2.6752e8;      // rad s^-1 T^-1
inline constexpr double kGammaSi29 = -5.31e7;    // rad s^-1 T^-1
inline constexpr double kHyperfineSi29MHz = -160.1;

// Silicon lattice.
inline constexpr double kSiLatticeConstant = 0.5431;  // nm
inline constexpr double kSiThermalAmplitude = 0.0074;  // nm, 1-D rms

}  // namespace channelion::constants
