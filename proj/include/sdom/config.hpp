#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "sdom/dominance.hpp"
#include "sdom/kde.hpp"
#include "sdom/sae.hpp"
#include "sdom/synth.hpp"
#include "sdom/trainer.hpp"

namespace sdom {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One JSON config drives every command. Defaults follow the reference
// hyperparameters (h=3, psi=90, T1=50, T2=150, AdamW 0.001/0.01, 200 and
// 500 epochs). Unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 42;
    SynthSpec synth{};
    KdeConfig kde{};
    ClampConfig clamp{};
    SaeTrainConfig sae{};
    TrainConfig train{};
    EvalOptions eval{};

    void validate() const;
};

RunConfig default_run_config();
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text);

// schema text for --help and the README
std::string run_config_schema();

} // namespace sdom
