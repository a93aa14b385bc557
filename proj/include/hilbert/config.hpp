#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hilbert/collision.hpp"
#include "hilbert/expansion.hpp"

namespace hilbert {

enum class Scenario { steady, standing_wave, custom };

struct RunConfig {
    Scenario scenario = Scenario::standing_wave;
    double amplitude = 1e-2;
    int wavenumber_index = 1;
    // custom scenario: rho = rho_bar + sum a_m cos(k_m x), u = sum b_m sin(k_m x)
    std::vector<double> custom_rho_modes;
    std::vector<double> custom_u_modes;

    int n_x = 64;
    double length = 2.0 * 3.14159265358979323846;
    int n_per_axis = 16;
    double v_max = 8.0;

    std::vector<double> epsilon_list{0.08, 0.04, 0.02};
    double t_final = 1.0;
    double dt = 0.02;           // largest kinetic step
    double sample_interval = 0.02;
    double dt_guard = 0.5;
    int k_trunc = 1;
    double beta = 3.5;
    double K_eos = 1.0;
    double rho_bar = 1.0;
    Backend backend = Backend::bgk;
    double bgk_rate_scale = 1.0;
    ForcingMode forcing = ForcingMode::micro_moments;
    double remainder_amplitude = 0.0; // F_R(0) = a * omega * uniform(-1, 1)
    std::uint64_t seed = 1;
    std::string output_dir = "hilbert_out";
};

RunConfig parse_config_string(const std::string& text);
RunConfig load_config(const std::string& path);

// Sets one field from its textual value, as written in a config file.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// Throws ConfigError on the first violated invariant.
void validate(const RunConfig& cfg);

std::string to_string(Scenario s);
std::string to_string(Backend b);
std::string to_string(ForcingMode f);

} // namespace hilbert
