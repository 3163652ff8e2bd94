#pragma once

// Lumped-element resonator circuit: an ideal inductor L shunted by its own
// stray capacitance C_L, in parallel with the capacitor under test C_C.
// Each capacitance carries an ESR representing its TLS loss.

#include <optional>
#include <span>
#include <string>
#include <utility>

namespace tlsloss::circuit {

class DeviceCircuitModel {
public:
    /// Throws InvalidModel unless L > 0, C_C > 0 and C_L >= 0.
    DeviceCircuitModel(double inductance, double capacitor_capacitance,
                       double inductor_capacitance, std::string label = {});

    [[nodiscard]] double inductance() const noexcept { return inductance_; }
    [[nodiscard]] double capacitor_capacitance() const noexcept { return capacitor_capacitance_; }
    [[nodiscard]] double inductor_capacitance() const noexcept { return inductor_capacitance_; }
    [[nodiscard]] double total_capacitance() const noexcept {
        return capacitor_capacitance_ + inductor_capacitance_;
    }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }

private:
    double inductance_;
    double capacitor_capacitance_;
    double inductor_capacitance_;
    std::string label_;
};

struct ParticipationRatios {
    double capacitor = 0.0;
    double inductor = 0.0;
};

/// Affine dependence of the inductor parameters on the number of arm pairs.
struct ArmScalingModel {
    double inductance_offset = 0.0;       // H
    double inductance_per_arm = 0.0;      // H per arm pair
    double capacitance_offset = 0.0;      // F
    double capacitance_per_arm = 0.0;     // F per arm pair
};

struct InductorParameters {
    double inductance = 0.0;     // H
    double capacitance = 0.0;    // F
};

struct SimulatedPoint {
    double capacitor_capacitance = 0.0;  // F
    double frequency = 0.0;              // Hz
};

struct LcFit {
    double inductance = 0.0;
    double inductor_capacitance = 0.0;
    /// RMS residual of the linearised model, in s^2 (units of 1/(2 pi f0)^2).
    double rms_residual = 0.0;
};

struct ArmRow {
    int arm_pairs = 0;
    double inductance = 0.0;
    double capacitance = 0.0;
};

enum class DesignKind { LePpc, LeIdc, Cpw };

std::string_view to_string(DesignKind kind);
DesignKind design_kind_from_string(std::string_view text);

/// One row of a device table. CPW devices have no lumped circuit.
struct DeviceRecord {
    std::string label;
    DesignKind design = DesignKind::Cpw;
    std::string material;
    double measured_frequency = 0.0;          // Hz
    std::optional<int> arm_pairs;
    std::optional<double> coupling_gap;       // m, metadata only
    std::optional<DeviceCircuitModel> circuit;
    std::optional<double> loss;               // measured F tan(delta), if tabulated
    std::optional<double> loss_sigma;

    /// Throws InvalidArgument if f0 <= 0 or a CPW row carries a circuit.
    void validate() const;
};

/// f0 = 1 / (2 pi sqrt(L (C_C + C_L))).
[[nodiscard]] double resonance_frequency(const DeviceCircuitModel& model);

/// Inverse of resonance_frequency for the capacitor. Throws
/// InfeasibleGeometry when the implied total capacitance does not exceed C_L.
[[nodiscard]] double capacitance_from_frequency(double frequency, double inductance,
                                                double inductor_capacitance);

/// Ordinary least squares on 1/(2 pi f0)^2 = L C_C + L C_L.
[[nodiscard]] LcFit fit_lc(std::span<const SimulatedPoint> points);

[[nodiscard]] InductorParameters arm_scaling_eval(const ArmScalingModel& scaling, int arm_pairs);

/// Affine fit (least squares when more than two rows) of the arm scaling.
[[nodiscard]] ArmScalingModel fit_arm_scaling(std::span<const ArmRow> rows);

[[nodiscard]] ParticipationRatios participation_ratios(const DeviceCircuitModel& model);

/// Participation-weighted total loss of a lumped resonator.
[[nodiscard]] double combined_loss(const DeviceCircuitModel& model, double capacitor_loss,
                                   double inductor_loss);

/// Relative deviation of the circuit-predicted f0 from the measured f0.
/// Informational only; tabulated devices are not required to agree.
[[nodiscard]] std::optional<double> frequency_consistency(const DeviceRecord& record);

}  // namespace tlsloss::circuit
