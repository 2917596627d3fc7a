#pragma once

// Frequency-dependent external load seen by the resonator: either a plain
// resistor, a synthesized taper into the port termination, or a tabulated
// response (linear interpolation in frequency, clamped at the ends).

#include <algorithm>
#include <complex>
#include <memory>
#include <variant>

#include "snimpa/errors.hpp"
#include "snimpa/taper_network.hpp"
#include "snimpa/units.hpp"

namespace snimpa {

class Environment {
   public:
    static Environment resistive(double ohms) {
        if (!(ohms > 0.0)) throw PreconditionError("z_env", "resistance must be strictly positive");
        return Environment(Resistive{ohms});
    }

    static Environment taper(const TaperSpec& spec) {
        auto prof = std::make_shared<const TaperProfile>(synthesize(spec));
        return Environment(Tapered{prof, spec.z_port});
    }

    static Environment tabulated(EnvironmentResponse r) {
        if (r.frequencies.size() != r.z_env.size() || r.frequencies.empty()) {
            throw PreconditionError("z_env", "table must be non-empty with one impedance per frequency");
        }
        for (std::size_t i = 1; i < r.frequencies.size(); ++i) {
            if (!(r.frequencies[i] > r.frequencies[i - 1])) {
                throw PreconditionError("frequencies", "must be strictly increasing");
            }
        }
        return Environment(Tabulated{std::make_shared<const EnvironmentResponse>(std::move(r))});
    }

    /// Impedance (ohm) at frequency f (Hz).
    complex impedance(double f) const {
        return std::visit([f](const auto& e) { return e.at(f); }, model_);
    }

    complex admittance_at_omega(double omega) const { return 1.0 / impedance(units::hertz(omega)); }

   private:
    struct Resistive {
        double r;
        complex at(double) const { return {r, 0.0}; }
    };
    struct Tapered {
        std::shared_ptr<const TaperProfile> profile;
        double z_port;
        complex at(double f) const { return environment_impedance_at(*profile, z_port, std::abs(f)); }
    };
    struct Tabulated {
        std::shared_ptr<const EnvironmentResponse> table;
        complex at(double f) const {
            const auto& x = table->frequencies;
            const auto& y = table->z_env;
            if (f <= x.front()) return y.front();
            if (f >= x.back()) return y.back();
            const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), f) - x.begin());
            const double t = (f - x[hi - 1]) / (x[hi] - x[hi - 1]);
            return y[hi - 1] + t * (y[hi] - y[hi - 1]);
        }
    };
    using Model = std::variant<Resistive, Tapered, Tabulated>;
    explicit Environment(Model m) : model_(std::move(m)) {}
    Model model_;
};

}  // namespace snimpa
