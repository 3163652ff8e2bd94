#pragma once

// Three-device dielectric loss extraction.
//
//   device A: lumped resonator, parallel-plate capacitor (material under test)
//   device B: lumped resonator, interdigitated capacitor, same inductor design
//   device C: CPW resonator whose gap/width mimic the IDC fingers
//
// C's loss stands in for the IDC finger loss, B then fixes the inductor
// loss, and A yields the PPC dielectric loss (filling factor 1).

#include "tlsloss/circuit_model.hpp"
#include "tlsloss/error.hpp"

#include <string>

namespace tlsloss::extraction {

/// A loss with its one-sigma uncertainty (0 when unknown).
struct Measured {
    double value = 0.0;
    double sigma = 0.0;
};

struct LumpedDevice {
    Measured loss;
    circuit::DeviceCircuitModel circuit;
};

struct ExtractionInput {
    LumpedDevice ppc_device;  // A
    LumpedDevice idc_device;  // B
    Measured cpw_loss;        // C

    void validate() const;
};

struct ExtractionResult {
    Measured idc_loss;             // CPW proxy
    Measured inductor_loss;        // F_L tan(delta_L)
    Measured ppc_loss;             // tan(delta_PPC)
    Measured single_measurement;   // F_A tan(delta_A)
    Measured fractional_difference;  // (ppc - single) / single
};

/// Stage-tagged extraction error.
class InconsistentInputs : public Error {
public:
    InconsistentInputs(std::string stage, const std::string& message)
        : Error(ErrorKind::InconsistentInputs, stage + ": " + message), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// CPW loss used unchanged as the IDC finger loss.
[[nodiscard]] double idc_loss_proxy(double cpw_loss);

/// (C_B loss_B - C_IDC loss_IDC) / C_L with C_B = C_IDC + C_L.
[[nodiscard]] double inductor_loss(double device_b_loss, double idc_capacitance,
                                   double inductor_capacitance, double idc_loss);

/// (C_A loss_A - C_L loss_L) / C_C with C_A = C_C + C_L.
[[nodiscard]] double ppc_loss(double device_a_loss, double capacitor_capacitance,
                              double inductor_capacitance, double inductor_loss);

[[nodiscard]] inline double single_measurement_estimate(double device_a_loss) {
    if (!(device_a_loss > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "single-measurement: loss must be positive");
    }
    return device_a_loss;
}

/// Runs the full chain with first-order (exact, since every stage is affine)
/// propagation of independent input uncertainties.
[[nodiscard]] ExtractionResult extract(const ExtractionInput& input);

}  // namespace tlsloss::extraction
