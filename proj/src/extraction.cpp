#include "tlsloss/extraction.hpp"

#include <cmath>
#include <sstream>

namespace tlsloss::extraction {
namespace {

double quadrature(std::initializer_list<double> terms) {
    double sum = 0.0;
    for (double t : terms) sum += t * t;
    return std::sqrt(sum);
}

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be positive");
    }
}

}  // namespace

void ExtractionInput::validate() const {
    require_positive(ppc_device.loss.value, "device A loss");
    require_positive(idc_device.loss.value, "device B loss");
    require_positive(cpw_loss.value, "device C loss");
    require_positive(idc_device.circuit.inductor_capacitance(), "device B inductor capacitance");
    for (const Measured* m : {&ppc_device.loss, &idc_device.loss, &cpw_loss}) {
        if (!(m->sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "loss sigma must be >= 0");
    }
}

double idc_loss_proxy(double cpw_loss) {
    require_positive(cpw_loss, "CPW loss");
    return cpw_loss;
}

double inductor_loss(double device_b_loss, double idc_capacitance, double inductor_capacitance,
                     double idc_loss) {
    require_positive(device_b_loss, "device B loss");
    require_positive(idc_loss, "IDC loss");
    require_positive(idc_capacitance, "C_IDC");
    require_positive(inductor_capacitance, "C_L");
    const double value =
        device_b_loss + (idc_capacitance / inductor_capacitance) * (device_b_loss - idc_loss);
    if (value < 0.0) {
        std::ostringstream msg;
        msg << "IDC loss " << idc_loss << " exceeds what device B's total loss " << device_b_loss
            << " permits (inductor loss would be " << value << ")";
        throw InconsistentInputs("inductor_loss", msg.str());
    }
    return value;
}

double ppc_loss(double device_a_loss, double capacitor_capacitance, double inductor_capacitance,
                double inductor_loss) {
    require_positive(capacitor_capacitance, "C_C");
    if (!(inductor_capacitance >= 0.0)) throw Error(ErrorKind::InvalidArgument, "C_L must be >= 0");
    if (!(device_a_loss >= 0.0) || !(inductor_loss >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "losses must be >= 0");
    }
    const double value =
        device_a_loss + (inductor_capacitance / capacitor_capacitance) * (device_a_loss - inductor_loss);
    if (value < 0.0) {
        std::ostringstream msg;
        msg << "inductor loss " << inductor_loss << " exceeds what device A's total loss "
            << device_a_loss << " permits (PPC loss would be " << value << ")";
        throw InconsistentInputs("ppc_loss", msg.str());
    }
    return value;
}

ExtractionResult extract(const ExtractionInput& input) {
    input.validate();
    const auto& a = input.ppc_device;
    const auto& b = input.idc_device;
    const double c_idc = b.circuit.capacitor_capacitance();
    const double c_lb = b.circuit.inductor_capacitance();
    const double c_b = b.circuit.total_capacitance();
    const double c_ppc = a.circuit.capacitor_capacitance();
    const double c_la = a.circuit.inductor_capacitance();
    const double c_a = a.circuit.total_capacitance();

    ExtractionResult out;
    out.idc_loss = {idc_loss_proxy(input.cpw_loss.value), input.cpw_loss.sigma};

    out.inductor_loss.value = inductor_loss(b.loss.value, c_idc, c_lb, out.idc_loss.value);
    const double dl_db = c_b / c_lb;
    const double dl_dc = -c_idc / c_lb;
    out.inductor_loss.sigma = quadrature({dl_db * b.loss.sigma, dl_dc * input.cpw_loss.sigma});

    out.ppc_loss.value = ppc_loss(a.loss.value, c_ppc, c_la, out.inductor_loss.value);
    const double dp_da = c_a / c_ppc;
    const double dp_dl = -c_la / c_ppc;
    out.ppc_loss.sigma = quadrature(
        {dp_da * a.loss.sigma, dp_dl * dl_db * b.loss.sigma, dp_dl * dl_dc * input.cpw_loss.sigma});

    out.single_measurement = {single_measurement_estimate(a.loss.value), a.loss.sigma};

    // (ppc - a) / a; not affine in a, so first order only in that input.
    const double single = out.single_measurement.value;
    out.fractional_difference.value = (out.ppc_loss.value - single) / single;
    const double df_da = dp_da / single - out.ppc_loss.value / (single * single);
    out.fractional_difference.sigma =
        quadrature({df_da * a.loss.sigma, dp_dl * dl_db * b.loss.sigma / single,
                    dp_dl * dl_dc * input.cpw_loss.sigma / single});
    return out;
}

}  // namespace tlsloss::extraction
