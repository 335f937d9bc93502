#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace platoon {

enum class NodeKind { origin, destination, intersection };

struct RoadNode {
    int id = 0;
    std::string name;
    NodeKind kind = NodeKind::intersection;
};

struct AltitudeSample {
    double offset_m = 0.0;
    double altitude_m = 0.0;
};

// Directed road piece. Bidirectional roads appear as two segments.
struct RoadSegment {
    int from = 0;
    int to = 0;
    double length_m = 0.0;
    std::vector<AltitudeSample> altitude;  // offsets strictly increasing, 0..length_m
    double speed_limit_mps = 0.0;
};

class RoadNetwork;

// A resolved node sequence: contiguous segments with cumulative route
// coordinates. Zero-length routes (single node) are valid.
class Route {
  public:
    Route() = default;
    Route(std::vector<int> nodes, std::vector<RoadSegment> segments);

    const std::vector<int>& nodes() const { return nodes_; }
    const std::vector<RoadSegment>& segments() const { return segments_; }
    double total_length() const { return total_length_; }

    // Route coordinate of node index k (0 at the first node).
    double node_offset(std::size_t k) const { return node_offset_[k]; }

    // Road gradient angle alpha (radians) at route coordinate s.
    // Piecewise constant; at piece boundaries the right piece wins, except at
    // s = total_length where the last piece applies.
    double grade_at(double s) const;

    double altitude_at(double s) const;
    double speed_limit_at(double s) const;

  private:
    struct Piece {
        double s_begin;    // route coordinate where the piece starts
        double length;     // horizontal length
        double alt_begin;
        double alt_end;
        double speed_limit;
    };

    std::vector<int> nodes_;
    std::vector<RoadSegment> segments_;
    std::vector<double> node_offset_;
    std::vector<Piece> pieces_;
    double total_length_ = 0.0;

    const Piece& piece_at(double s) const;
};

// Single-segment route between synthetic nodes, handy for windows and tests.
Route make_route(double length_m, std::vector<AltitudeSample> altitude,
                 double speed_limit_mps);

struct OverlapInterval {
    int merge_node = 0;
    int split_node = 0;
    std::size_t a_first = 0;  // node index of merge_node on route a
    std::size_t b_first = 0;  // node index of merge_node on route b
    std::size_t node_count = 0;
    double a_merge_offset = 0.0;  // route coordinate of merge_node on a
    double b_merge_offset = 0.0;
    double length = 0.0;          // shared road length, identical on both routes
};

class RoadNetwork {
  public:
    static RoadNetwork from_json_text(const std::string& text);
    static RoadNetwork load(const std::string& path);

    const std::vector<RoadNode>& nodes() const { return nodes_; }
    const RoadNode& node(int id) const;
    const RoadSegment* find_segment(int from, int to) const;

    Route resolve_route(const std::vector<int>& node_ids) const;

  private:
    std::vector<RoadNode> nodes_;
    std::vector<RoadSegment> segments_;
    std::unordered_map<int, std::size_t> node_index_;
    std::unordered_map<long long, std::size_t> segment_index_;  // key from*2^32+to

    void index();
};

// Maximal contiguous node subsequence shared by both routes (same nodes, same
// order, same connecting segments). Returns nullopt when no shared segment
// exists. A shared interval must contain at least two nodes to be usable for
// platooning; single shared nodes are ignored.
std::optional<OverlapInterval> common_suffix_overlap(const Route& a, const Route& b);

}  // namespace platoon
