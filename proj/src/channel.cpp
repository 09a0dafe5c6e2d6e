#include "tvws/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tvws {

double us_uhf_center_mhz(int index) {
    return 473.0 + 6.0 * (index - 14);
}

ChannelPlan::ChannelPlan(std::vector<Channel> channels) : channels_(std::move(channels)) {
    std::sort(channels_.begin(), channels_.end());
    for (std::size_t k = 0; k < channels_.size(); ++k) {
        const Channel& c = channels_[k];
        if (!std::isfinite(c.center_freq_mhz) || c.center_freq_mhz <= 0.0)
            throw ValidationError("channel " + std::to_string(c.index) + ": bad center frequency",
                                  "center_freq_mhz");
        if (k > 0 && channels_[k - 1].index == c.index)
            throw ValidationError("duplicate channel index " + std::to_string(c.index), "index");
    }
}

ChannelPlan ChannelPlan::us_uhf(int first_index, int count) {
    std::vector<Channel> chans;
    chans.reserve(static_cast<std::size_t>(count));
    for (int n = first_index; n < first_index + count; ++n)
        chans.push_back({n, us_uhf_center_mhz(n)});
    return ChannelPlan(std::move(chans));
}

ChannelPlan ChannelPlan::parse(const std::string& text) {
    std::vector<Channel> chans;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // treat commas as whitespace so "index,freq" and "index freq" both work
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        int index = 0;
        double freq = 0.0;
        if (!(fields >> index)) continue; // blank or comment-only line
        if (!(fields >> freq))
            throw ValidationError("channel plan line " + std::to_string(lineno) +
                                      ": expected index,center_freq_mhz",
                                  "center_freq_mhz");
        chans.push_back({index, freq});
    }
    return ChannelPlan(std::move(chans));
}

ChannelPlan ChannelPlan::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open channel plan: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void ChannelPlan::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write channel plan: " + path);
    out << "# index,center_freq_mhz\n";
    for (const Channel& c : channels_) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%d,%g\n", c.index, c.center_freq_mhz);
        out << buf;
    }
}

bool ChannelPlan::contains(int index) const {
    const Channel probe{index, 0.0};
    return std::binary_search(channels_.begin(), channels_.end(), probe);
}

const Channel& ChannelPlan::at(int index) const {
    const Channel probe{index, 0.0};
    const auto it = std::lower_bound(channels_.begin(), channels_.end(), probe);
    if (it == channels_.end() || it->index != index)
        throw UnknownChannelError("channel " + std::to_string(index) + " not in plan");
    return *it;
}

std::vector<Channel> ChannelPlan::adjacent(int index) const {
    const Channel& c = at(index); // membership check
    (void)c;
    std::vector<Channel> out;
    if (contains(index - 1)) out.push_back(at(index - 1));
    if (contains(index + 1)) out.push_back(at(index + 1));
    return out;
}

std::vector<Channel> ChannelPlan::adjacent(const Channel& c) const {
    return adjacent(c.index);
}

double PowerClass::dbm() const {
    return 10.0 * std::log10(eirp_mw);
}

const std::vector<PowerClass>& default_power_ladder() {
    static const std::vector<PowerClass> ladder = {{1.0}, {5.0}, {10.0}, {40.0}, {100.0}};
    return ladder;
}

} // namespace tvws
