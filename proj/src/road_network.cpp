#include "platoon/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "platoon/errors.hpp"

namespace platoon {

namespace {

NodeKind parse_kind(const std::string& k) {
    if (k == "origin") return NodeKind::origin;
    if (k == "destination") return NodeKind::destination;
    if (k == "intersection") return NodeKind::intersection;
    throw ParseError("unknown node kind: " + k);
}

long long segment_key(int from, int to) {
    return (static_cast<long long>(from) << 32) | static_cast<unsigned int>(to);
}

}  // namespace

Route::Route(std::vector<int> nodes, std::vector<RoadSegment> segments)
    : nodes_(std::move(nodes)), segments_(std::move(segments)) {
    node_offset_.reserve(nodes_.size());
    double s = 0.0;
    node_offset_.push_back(0.0);
    for (const RoadSegment& seg : segments_) {
        for (std::size_t i = 0; i + 1 < seg.altitude.size(); ++i) {
            Piece p;
            p.s_begin = s + seg.altitude[i].offset_m;
            p.length = seg.altitude[i + 1].offset_m - seg.altitude[i].offset_m;
            p.alt_begin = seg.altitude[i].altitude_m;
            p.alt_end = seg.altitude[i + 1].altitude_m;
            p.speed_limit = seg.speed_limit_mps;
            pieces_.push_back(p);
        }
        s += seg.length_m;
        node_offset_.push_back(s);
    }
    total_length_ = s;
}

const Route::Piece& Route::piece_at(double s) const {
    if (pieces_.empty()) throw RangeError("route has no road pieces");
    if (s < 0.0 || s > total_length_)
        throw RangeError("route coordinate " + std::to_string(s) + " outside [0, " +
                         std::to_string(total_length_) + "]");
    // Right piece wins at interior boundaries; the last piece owns its end.
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), s,
                               [](double val, const Piece& p) { return val < p.s_begin; });
    if (it != pieces_.begin()) --it;
    return *it;
}

double Route::grade_at(double s) const {
    const Piece& p = piece_at(s);
    return std::asin((p.alt_end - p.alt_begin) / p.length);
}

double Route::altitude_at(double s) const {
    const Piece& p = piece_at(s);
    double f = (s - p.s_begin) / p.length;
    return p.alt_begin + f * (p.alt_end - p.alt_begin);
}

double Route::speed_limit_at(double s) const { return piece_at(s).speed_limit; }

RoadNetwork RoadNetwork::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network JSON parse failure: ") + e.what());
    }
    RoadNetwork net;
    try {
        for (const auto& jn : j.at("nodes")) {
            RoadNode n;
            n.id = jn.at("id").get<int>();
            n.name = jn.at("name").get<std::string>();
            n.kind = parse_kind(jn.at("kind").get<std::string>());
            net.nodes_.push_back(std::move(n));
        }
        for (const auto& js : j.at("segments")) {
            RoadSegment s;
            s.from = js.at("from").get<int>();
            s.to = js.at("to").get<int>();
            s.length_m = js.at("length_m").get<double>();
            s.speed_limit_mps = js.at("speed_limit_mps").get<double>();
            for (const auto& ja : js.at("altitude")) {
                if (!ja.is_array() || ja.size() != 2)
                    throw ParseError("altitude sample must be [offset_m, alt_m]");
                s.altitude.push_back({ja[0].get<double>(), ja[1].get<double>()});
            }
            net.segments_.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network JSON schema violation: ") + e.what());
    }
    net.index();
    return net;
}

RoadNetwork RoadNetwork::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void RoadNetwork::index() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!node_index_.emplace(nodes_[i].id, i).second)
            throw ParseError("duplicate node id " + std::to_string(nodes_[i].id));
    }
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const RoadSegment& s = segments_[i];
        if (!node_index_.count(s.from) || !node_index_.count(s.to))
            throw ParseError("segment references unknown node " + std::to_string(s.from) +
                             "->" + std::to_string(s.to));
        if (s.length_m <= 0.0) throw ParseError("segment length must be positive");
        if (s.speed_limit_mps <= 0.0) throw ParseError("speed limit must be positive");
        if (s.altitude.size() < 2 || s.altitude.front().offset_m != 0.0 ||
            std::abs(s.altitude.back().offset_m - s.length_m) > 1e-9)
            throw ParseError("altitude samples must span [0, length_m]");
        for (std::size_t k = 0; k + 1 < s.altitude.size(); ++k) {
            double run = s.altitude[k + 1].offset_m - s.altitude[k].offset_m;
            if (run <= 0.0) throw ParseError("altitude offsets must be strictly increasing");
            if (std::abs(s.altitude[k + 1].altitude_m - s.altitude[k].altitude_m) > run)
                throw ParseError("altitude piece steeper than |sin| = 1");
        }
        segment_index_.emplace(segment_key(s.from, s.to), i);
    }
}

const RoadNode& RoadNetwork::node(int id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw RangeError("unknown node id " + std::to_string(id));
    return nodes_[it->second];
}

const RoadSegment* RoadNetwork::find_segment(int from, int to) const {
    auto it = segment_index_.find(segment_key(from, to));
    return it == segment_index_.end() ? nullptr : &segments_[it->second];
}

Route RoadNetwork::resolve_route(const std::vector<int>& node_ids) const {
    if (node_ids.empty()) throw ConnectivityError("route needs at least one node");
    std::vector<RoadSegment> segs;
    segs.reserve(node_ids.size() - 1);
    for (int id : node_ids) node(id);  // validate existence
    for (std::size_t i = 0; i + 1 < node_ids.size(); ++i) {
        const RoadSegment* seg = find_segment(node_ids[i], node_ids[i + 1]);
        if (!seg)
            throw ConnectivityError("no segment " + std::to_string(node_ids[i]) + "->" +
                                    std::to_string(node_ids[i + 1]));
        segs.push_back(*seg);
    }
    return Route(node_ids, segs);
}

Route make_route(double length_m, std::vector<AltitudeSample> altitude,
                 double speed_limit_mps) {
    RoadSegment seg;
    seg.from = 0;
    seg.to = 1;
    seg.length_m = length_m;
    seg.altitude = std::move(altitude);
    seg.speed_limit_mps = speed_limit_mps;
    if (seg.altitude.empty()) seg.altitude = {{0.0, 0.0}, {length_m, 0.0}};
    return Route({0, 1}, {std::move(seg)});
}

std::optional<OverlapInterval> common_suffix_overlap(const Route& a, const Route& b) {
    const auto& an = a.nodes();
    const auto& bn = b.nodes();
    OverlapInterval best;
    bool found = false;
    for (std::size_t i = 0; i < an.size(); ++i) {
        for (std::size_t j = 0; j < bn.size(); ++j) {
            if (an[i] != bn[j]) continue;
            std::size_t k = 0;
            while (i + k + 1 < an.size() && j + k + 1 < bn.size() &&
                   an[i + k + 1] == bn[j + k + 1]) {
                ++k;
            }
            if (k == 0) continue;  // shared node but no shared segment
            if (!found || k + 1 > best.node_count) {
                best.merge_node = an[i];
                best.split_node = an[i + k];
                best.a_first = i;
                best.b_first = j;
                best.node_count = k + 1;
                best.a_merge_offset = a.node_offset(i);
                best.b_merge_offset = b.node_offset(j);
                best.length = a.node_offset(i + k) - a.node_offset(i);
                found = true;
            }
        }
    }
    if (!found) return std::nullopt;
    return best;
}

}  // namespace platoon
