#pragma once

#include <chrono>
#include <complex>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gridplan {

/// Raised for malformed or inconsistent input data. The message names the
/// offending element.
class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BusKind { Slack, Load };

struct Bus {
    int id = 0;
    std::string name;
    BusKind kind = BusKind::Load;
    double v_nominal = 400.0;  // line-to-line volts
};

struct LineType {
    std::string name;
    double r_per_km = 0.0;  // ohm/km
    double x_per_km = 0.0;  // ohm/km
    double ampacity = 0.0;  // A
    double acquisition_cost = 0.0;  // euro/km
};

struct LineSegment {
    int from_bus = 0;
    int to_bus = 0;
    double length_km = 0.0;
    std::string line_type;
    int n_parallel = 1;
};

/// Series impedance between the upstream (MV) source and the LV bus, which is
/// the slack bus of the radial grid.
struct Transformer {
    double rating_kva = 630.0;
    int lv_bus = 0;
    double impedance_ohm = 0.0;  // magnitude, referred to LV side
    double x_r_ratio = 4.0;
    double replacement_cost = 21000.0;

    std::complex<double> impedance() const;
};

/// One subtree hanging off the slack bus.
struct Branch {
    int root = 0;                // first bus below the slack
    std::vector<int> buses;      // preorder
    std::vector<int> segments;   // segment indices inside the subtree, preorder
};

/// Radial distribution grid. Validated on construction and immutable
/// afterwards; edits produce new instances.
class GridNetwork {
public:
    GridNetwork(std::vector<Bus> buses, std::vector<LineSegment> segments,
                Transformer transformer, std::vector<LineType> catalog);

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int segment_count() const { return static_cast<int>(segments_.size()); }
    int slack() const { return slack_; }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<LineSegment>& segments() const { return segments_; }
    const Transformer& transformer() const { return transformer_; }
    const std::vector<LineType>& catalog() const { return catalog_; }

    const Bus& bus(int id) const { return buses_.at(static_cast<size_t>(id)); }
    const LineSegment& segment(int index) const { return segments_.at(static_cast<size_t>(index)); }
    const LineType& line_type(const std::string& name) const;
    const LineType& line_type_of(int seg) const { return line_type(segment(seg).line_type); }
    bool has_line_type(const std::string& name) const;

    /// Segment connecting `bus` to its parent; -1 for the slack.
    int parent_segment(int bus) const { return parent_segment_[static_cast<size_t>(bus)]; }
    int parent_bus(int bus) const { return parent_bus_[static_cast<size_t>(bus)]; }
    /// Bus on the downstream side of a segment.
    int downstream_bus(int segment) const { return downstream_bus_[static_cast<size_t>(segment)]; }
    int depth(int bus) const { return depth_[static_cast<size_t>(bus)]; }
    const std::vector<int>& children(int bus) const { return children_[static_cast<size_t>(bus)]; }

    /// Buses in depth-first preorder from the slack; subtrees are contiguous.
    const std::vector<int>& preorder() const { return preorder_; }
    int preorder_position(int bus) const { return preorder_pos_[static_cast<size_t>(bus)]; }
    int subtree_size(int bus) const { return subtree_size_[static_cast<size_t>(bus)]; }
    bool in_subtree(int bus, int root) const;

    /// Effective series impedance in ohm (type impedance * length / n_parallel).
    std::complex<double> segment_impedance(int segment) const;
    /// Effective ampacity in A (type ampacity * n_parallel).
    double segment_ampacity(int segment) const;

    double s_base_kva() const { return transformer_.rating_kva; }
    double v_base(int b) const { return bus(b).v_nominal; }
    /// Ohm per p.u. on the LV side of the grid.
    double z_base(int bus) const;
    /// Ampere per p.u. current.
    double i_base(int bus) const;

    GridNetwork with_segment(int index, LineSegment replacement) const;
    GridNetwork with_transformer(Transformer replacement) const;

private:
    void validate_and_index();

    std::vector<Bus> buses_;
    std::vector<LineSegment> segments_;
    Transformer transformer_;
    std::vector<LineType> catalog_;

    int slack_ = 0;
    std::vector<int> parent_segment_;
    std::vector<int> parent_bus_;
    std::vector<int> downstream_bus_;
    std::vector<int> depth_;
    std::vector<std::vector<int>> children_;
    std::vector<int> preorder_;
    std::vector<int> preorder_pos_;
    std::vector<int> subtree_size_;
};

GridNetwork load_grid(const std::filesystem::path& path);
GridNetwork parse_grid(const std::string& json_text);
std::string grid_to_json(const GridNetwork& grid);

std::vector<Branch> branches(const GridNetwork& grid);
/// Index of the branch containing `bus`, -1 for the slack.
int branch_of(const std::vector<Branch>& all, int bus);

/// Unique tree path from `bus` to the slack as segment indices, slack first.
std::vector<int> path_to_slack(const GridNetwork& grid, int bus);

using Timestamp = std::chrono::sys_seconds;

Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);

/// Hourly per-bus active power; rows are hours, columns are bus ids.
class InjectionSeries {
public:
    InjectionSeries() = default;
    InjectionSeries(std::vector<Timestamp> timestamps, Eigen::MatrixXd load_kw,
                    Eigen::MatrixXd generation_kw);

    int hours() const { return static_cast<int>(timestamps_.size()); }
    int buses() const { return static_cast<int>(load_.cols()); }
    const std::vector<Timestamp>& timestamps() const { return timestamps_; }
    const Eigen::MatrixXd& load_kw() const { return load_; }
    const Eigen::MatrixXd& generation_kw() const { return generation_; }

    /// Generation minus load per hour and bus.
    Eigen::MatrixXd net_kw() const { return generation_ - load_; }
    /// Grid-total generation minus load per hour.
    Eigen::VectorXd total_surplus_kw() const { return net_kw().rowwise().sum(); }

    InjectionSeries window(int start, int length) const;
    InjectionSeries with_generation(Eigen::MatrixXd generation_kw) const;

private:
    std::vector<Timestamp> timestamps_;
    Eigen::MatrixXd load_;
    Eigen::MatrixXd generation_;
};

InjectionSeries load_injections(const std::filesystem::path& path, int bus_count);
InjectionSeries parse_injections(const std::string& csv_text, int bus_count);
std::string injections_to_csv(const InjectionSeries& series);

}  // namespace gridplan
