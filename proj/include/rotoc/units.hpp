#pragma once

// Unit bridge. Energies are frequencies in MHz, time in ns, fields in kV/cm,
// dipoles in Debye. Atomic units are only used by the control update, which
// is evaluated with hbar = 1.

#include <numbers>

namespace rotoc::units {

// CODATA 2018
inline constexpr double kDebyeCm = 3.33564e-30;            // C m
inline constexpr double kPlanck = 6.62607015e-34;          // J s
inline constexpr double kHartreeMHz = 6.579683920502e9;    // E_h / h
inline constexpr double kAuDipoleDebye = 2.541746473;      // e a0 in D

/// mu*E/h per Debye per kV/cm, in MHz (503.41).
inline constexpr double kDipoleFieldMHz = kDebyeCm * 1.0e5 / kPlanck * 1.0e-6;

/// Atomic field unit in kV/cm (5.1422e6), derived from the constants above so
/// that mu_au * E_au * E_h equals mu * E * kDipoleFieldMHz to rounding.
inline constexpr double kAuFieldKVcm = kHartreeMHz / (kAuDipoleDebye * kDipoleFieldMHz);

/// Atomic time unit hbar/E_h in ns, derived from kHartreeMHz so that the
/// atomic-unit and MHz/ns propagators agree exactly.
inline constexpr double kAuTimeNs = 1.0 / (2.0 * std::numbers::pi * kHartreeMHz * 1.0e-3);

/// Phase accumulated per MHz per ns: exp(-i * kPhase * E[MHz] * t[ns]).
inline constexpr double kPhase = 2.0 * std::numbers::pi * 1.0e-3;

inline constexpr double debye_to_au(double mu) { return mu / kAuDipoleDebye; }
inline constexpr double field_au_to_kvcm(double e) { return e * kAuFieldKVcm; }
inline constexpr double field_kvcm_to_au(double e) { return e / kAuFieldKVcm; }
inline constexpr double ns_to_au(double t) { return t / kAuTimeNs; }

}  // namespace rotoc::units
