#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace inq {

/// Accumulated portions of weights frozen after each step: strictly
/// increasing, in (0, 1], ending at exactly 1.
struct InqSchedule {
    std::vector<double> sigmas;

    std::size_t steps() const { return sigmas.size(); }
};

inline InqSchedule make_schedule(std::vector<double> sigmas) {
    if (sigmas.empty()) throw std::invalid_argument("schedule: at least one step required");
    double prev = 0.0;
    for (double s : sigmas) {
        if (!(s > prev)) throw std::invalid_argument("schedule: portions must be strictly increasing");
        if (s > 1.0) throw std::invalid_argument("schedule: portions must be in (0, 1]");
        prev = s;
    }
    if (sigmas.back() != 1.0) throw std::invalid_argument("schedule: final portion must be 1");
    InqSchedule sched;
    sched.sigmas = std::move(sigmas);
    return sched;
}

/// Preset accumulated-portion schedules under stable names: per-architecture
/// 5-bit recipes plus the longer low-bit ramps.
inline const std::map<std::string, InqSchedule>& preset_schedules() {
    static const std::map<std::string, InqSchedule> presets = {
        {"alexnet-5bit", make_schedule({0.3, 0.6, 0.8, 1.0})},
        {"vgg16-5bit", make_schedule({0.5, 0.75, 0.875, 1.0})},
        {"googlenet-5bit", make_schedule({0.2, 0.4, 0.6, 0.8, 1.0})},
        {"resnet18-5bit", make_schedule({0.5, 0.75, 0.875, 1.0})},
        {"4bit", make_schedule({0.3, 0.5, 0.8, 0.9, 0.95, 1.0})},
        {"3bit", make_schedule({0.2, 0.4, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0})},
        {"2bit", make_schedule({0.2, 0.4, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.975, 1.0})},
    };
    return presets;
}

/// Preset by name, or a comma-separated portion list like "0.5,0.75,1".
inline InqSchedule parse_schedule(const std::string& text) {
    auto it = preset_schedules().find(text);
    if (it != preset_schedules().end()) return it->second;
    std::vector<double> sigmas;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string tok = text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            sigmas.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw std::invalid_argument("schedule: not a preset name or portion list: " + text);
        }
        pos = comma + 1;
    }
    return make_schedule(std::move(sigmas));
}

} // namespace inq
