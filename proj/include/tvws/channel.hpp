#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvws/errors.hpp"

namespace tvws {

struct Channel {
    int index = 0;
    double center_freq_mhz = 0.0;

    bool operator==(const Channel& o) const { return index == o.index; }
    bool operator<(const Channel& o) const { return index < o.index; }
};

// US UHF channel numbering: channel n is centered at 473 + 6*(n - 14) MHz.
double us_uhf_center_mhz(int index);

class ChannelPlan {
public:
    ChannelPlan() = default;
    explicit ChannelPlan(std::vector<Channel> channels);

    // Contiguous run of US UHF channels starting at first_index.
    static ChannelPlan us_uhf(int first_index, int count);

    // One "index,center_freq_mhz" record per line; '#' starts a comment.
    static ChannelPlan load(const std::string& path);
    static ChannelPlan parse(const std::string& text);
    void save(const std::string& path) const;

    const std::vector<Channel>& channels() const { return channels_; }
    std::size_t size() const { return channels_.size(); }
    bool empty() const { return channels_.empty(); }

    bool contains(int index) const;
    const Channel& at(int index) const; // throws UnknownChannelError

    // Channels numbered index±1 that exist in the plan (0, 1 or 2 results).
    // Adjacency is numeric; plan membership filters. Throws UnknownChannelError
    // if c itself is not in the plan.
    std::vector<Channel> adjacent(const Channel& c) const;
    std::vector<Channel> adjacent(int index) const;

private:
    std::vector<Channel> channels_; // sorted by index, unique
};

struct PowerClass {
    double eirp_mw = 0.0;

    double dbm() const;
    bool operator==(const PowerClass& o) const { return eirp_mw == o.eirp_mw; }
    bool operator<(const PowerClass& o) const { return eirp_mw < o.eirp_mw; }
};

// Ascending ladder of portable-device power classes: 1, 5, 10, 40, 100 mW.
const std::vector<PowerClass>& default_power_ladder();

} // namespace tvws
