#include "gridplan/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "text_io.hpp"

namespace gridplan {

using nlohmann::json;

namespace detail {

double parse_double(const std::string& text, const std::string& context) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw GridError("parse error: bad number '" + text + "' in " + context);
    return value;
}

}  // namespace detail

std::complex<double> Transformer::impedance() const {
    const double r = impedance_ohm / std::sqrt(1.0 + x_r_ratio * x_r_ratio);
    return {r, r * x_r_ratio};
}

GridNetwork::GridNetwork(std::vector<Bus> buses, std::vector<LineSegment> segments,
                         Transformer transformer, std::vector<LineType> catalog)
    : buses_(std::move(buses)),
      segments_(std::move(segments)),
      transformer_(std::move(transformer)),
      catalog_(std::move(catalog)) {
    validate_and_index();
}

void GridNetwork::validate_and_index() {
    const int n = bus_count();
    if (n == 0) throw GridError("grid has no buses");

    std::vector<int> seen(static_cast<size_t>(n), 0);
    for (const Bus& b : buses_) {
        if (b.id < 0 || b.id >= n) throw GridError("bus ids must be contiguous from 0: bus id " + std::to_string(b.id));
        if (seen[static_cast<size_t>(b.id)]++) throw GridError("duplicate bus id " + std::to_string(b.id));
        if (!(b.v_nominal > 0.0)) throw GridError("bus " + std::to_string(b.id) + ": v_nominal must be positive");
    }
    std::sort(buses_.begin(), buses_.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });

    const auto slack_count = std::count_if(buses_.begin(), buses_.end(),
                                           [](const Bus& b) { return b.kind == BusKind::Slack; });
    if (slack_count != 1) throw GridError("grid must have exactly one slack bus, found " + std::to_string(slack_count));
    slack_ = std::find_if(buses_.begin(), buses_.end(), [](const Bus& b) { return b.kind == BusKind::Slack; })->id;

    if (!(transformer_.rating_kva > 0.0)) throw GridError("transformer rating must be positive");
    if (transformer_.impedance_ohm < 0.0) throw GridError("transformer impedance must be non-negative");
    if (transformer_.lv_bus != slack_)
        throw GridError("transformer lv_bus " + std::to_string(transformer_.lv_bus) + " is not the slack bus");

    for (const LineType& t : catalog_) {
        if (!(t.r_per_km > 0.0)) throw GridError("line type '" + t.name + "': r_per_km must be positive");
        if (!(t.ampacity > 0.0)) throw GridError("line type '" + t.name + "': ampacity must be positive");
        if (t.x_per_km < 0.0 || t.acquisition_cost < 0.0)
            throw GridError("line type '" + t.name + "': negative reactance or cost");
    }
    std::vector<const LineType*> by_r;
    for (const LineType& t : catalog_) by_r.push_back(&t);
    std::sort(by_r.begin(), by_r.end(), [](const LineType* a, const LineType* b) { return a->r_per_km > b->r_per_km; });
    for (size_t i = 1; i < by_r.size(); ++i) {
        if (!(by_r[i]->r_per_km < by_r[i - 1]->r_per_km) || !(by_r[i]->ampacity > by_r[i - 1]->ampacity))
            throw GridError("line catalog: '" + by_r[i]->name + "' and '" + by_r[i - 1]->name +
                            "' violate the resistance/ampacity ordering");
        if (by_r[i]->name == by_r[i - 1]->name) throw GridError("line catalog: duplicate type '" + by_r[i]->name + "'");
    }

    // Union-find for loop detection.
    std::vector<int> root(static_cast<size_t>(n));
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int x) {
        while (root[static_cast<size_t>(x)] != x) {
            root[static_cast<size_t>(x)] = root[static_cast<size_t>(root[static_cast<size_t>(x)])];
            x = root[static_cast<size_t>(x)];
        }
        return x;
    };
    std::vector<std::vector<std::pair<int, int>>> adjacency(static_cast<size_t>(n));
    for (int s = 0; s < segment_count(); ++s) {
        const LineSegment& seg = segments_[static_cast<size_t>(s)];
        const std::string label = "segment " + std::to_string(s) + " (" + std::to_string(seg.from_bus) + "-" +
                                  std::to_string(seg.to_bus) + ")";
        if (seg.from_bus < 0 || seg.from_bus >= n || seg.to_bus < 0 || seg.to_bus >= n)
            throw GridError(label + ": unknown bus id");
        if (seg.from_bus == seg.to_bus) throw GridError("non-radial topology: " + label + " is a self loop");
        if (!(seg.length_km > 0.0)) throw GridError(label + ": length must be positive");
        if (seg.n_parallel < 1) throw GridError(label + ": n_parallel must be at least 1");
        if (!has_line_type(seg.line_type)) throw GridError("unknown line type '" + seg.line_type + "' in " + label);
        const int a = find(seg.from_bus);
        const int b = find(seg.to_bus);
        if (a == b) throw GridError("non-radial topology: " + label + " closes a loop");
        root[static_cast<size_t>(a)] = b;
        adjacency[static_cast<size_t>(seg.from_bus)].emplace_back(seg.to_bus, s);
        adjacency[static_cast<size_t>(seg.to_bus)].emplace_back(seg.from_bus, s);
    }
    if (segment_count() != n - 1)
        throw GridError("non-radial topology: grid is not connected (" + std::to_string(n) + " buses, " +
                        std::to_string(segment_count()) + " segments)");

    parent_segment_.assign(static_cast<size_t>(n), -1);
    parent_bus_.assign(static_cast<size_t>(n), -1);
    depth_.assign(static_cast<size_t>(n), 0);
    children_.assign(static_cast<size_t>(n), {});
    downstream_bus_.assign(static_cast<size_t>(segment_count()), -1);
    preorder_.clear();
    preorder_.reserve(static_cast<size_t>(n));

    for (auto& adj : adjacency) std::sort(adj.begin(), adj.end());

    // Iterative DFS; children visited in ascending bus id.
    std::vector<int> stack{slack_};
    std::vector<char> visited(static_cast<size_t>(n), 0);
    visited[static_cast<size_t>(slack_)] = 1;
    while (!stack.empty()) {
        const int b = stack.back();
        stack.pop_back();
        preorder_.push_back(b);
        const auto& adj = adjacency[static_cast<size_t>(b)];
        for (auto it = adj.rbegin(); it != adj.rend(); ++it) {
            const auto [next, seg] = *it;
            if (visited[static_cast<size_t>(next)]) continue;
            visited[static_cast<size_t>(next)] = 1;
            parent_segment_[static_cast<size_t>(next)] = seg;
            parent_bus_[static_cast<size_t>(next)] = b;
            depth_[static_cast<size_t>(next)] = depth_[static_cast<size_t>(b)] + 1;
            downstream_bus_[static_cast<size_t>(seg)] = next;
            stack.push_back(next);
        }
        for (const auto& [next, seg] : adj)
            if (parent_segment_[static_cast<size_t>(next)] == seg) children_[static_cast<size_t>(b)].push_back(next);
    }
    if (static_cast<int>(preorder_.size()) != n) throw GridError("non-radial topology: grid is not connected");

    preorder_pos_.assign(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) preorder_pos_[static_cast<size_t>(preorder_[static_cast<size_t>(i)])] = i;
    subtree_size_.assign(static_cast<size_t>(n), 1);
    for (int i = n - 1; i > 0; --i) {
        const int b = preorder_[static_cast<size_t>(i)];
        subtree_size_[static_cast<size_t>(parent_bus_[static_cast<size_t>(b)])] += subtree_size_[static_cast<size_t>(b)];
    }
}

const LineType& GridNetwork::line_type(const std::string& name) const {
    for (const LineType& t : catalog_)
        if (t.name == name) return t;
    throw GridError("unknown line type '" + name + "'");
}

bool GridNetwork::has_line_type(const std::string& name) const {
    return std::any_of(catalog_.begin(), catalog_.end(), [&](const LineType& t) { return t.name == name; });
}

bool GridNetwork::in_subtree(int bus, int root) const {
    const int p = preorder_position(bus);
    const int r = preorder_position(root);
    return p >= r && p < r + subtree_size(root);
}

std::complex<double> GridNetwork::segment_impedance(int index) const {
    const LineSegment& seg = segment(index);
    const LineType& t = line_type(seg.line_type);
    return std::complex<double>(t.r_per_km, t.x_per_km) * seg.length_km / static_cast<double>(seg.n_parallel);
}

double GridNetwork::segment_ampacity(int index) const {
    const LineSegment& seg = segment(index);
    return line_type(seg.line_type).ampacity * seg.n_parallel;
}

double GridNetwork::z_base(int b) const {
    const double v = v_base(b);
    return v * v / (s_base_kva() * 1000.0);
}

double GridNetwork::i_base(int b) const { return s_base_kva() * 1000.0 / (std::sqrt(3.0) * v_base(b)); }

GridNetwork GridNetwork::with_segment(int index, LineSegment replacement) const {
    std::vector<LineSegment> segs = segments_;
    segs.at(static_cast<size_t>(index)) = std::move(replacement);
    return GridNetwork(buses_, std::move(segs), transformer_, catalog_);
}

GridNetwork GridNetwork::with_transformer(Transformer replacement) const {
    return GridNetwork(buses_, segments_, std::move(replacement), catalog_);
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& context) {
    if (!obj.is_object() || !obj.contains(key)) throw GridError("parse error: missing key '" + std::string(key) + "' in " + context);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw GridError("parse error: key '" + std::string(key) + "' in " + context + ": " + e.what());
    }
}

}  // namespace

GridNetwork parse_grid(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw GridError(std::string("parse error: ") + e.what());
    }
    for (const char* key : {"buses", "segments", "transformer", "catalog"})
        if (!doc.contains(key)) throw GridError(std::string("parse error: missing top-level key '") + key + "'");

    std::vector<Bus> buses;
    for (const json& b : doc["buses"]) {
        Bus bus;
        bus.id = required<int>(b, "id", "bus");
        const std::string ctx = "bus " + std::to_string(bus.id);
        bus.name = b.value("name", "bus_" + std::to_string(bus.id));
        const auto kind = required<std::string>(b, "kind", ctx);
        if (kind == "slack") bus.kind = BusKind::Slack;
        else if (kind == "load") bus.kind = BusKind::Load;
        else throw GridError("parse error: " + ctx + " has unknown kind '" + kind + "'");
        bus.v_nominal = required<double>(b, "v_nominal_v", ctx);
        buses.push_back(std::move(bus));
    }

    std::vector<LineSegment> segments;
    int index = 0;
    for (const json& s : doc["segments"]) {
        const std::string ctx = "segment " + std::to_string(index++);
        LineSegment seg;
        seg.from_bus = required<int>(s, "from", ctx);
        seg.to_bus = required<int>(s, "to", ctx);
        seg.length_km = required<double>(s, "length_km", ctx);
        seg.line_type = required<std::string>(s, "type", ctx);
        seg.n_parallel = s.value("n_parallel", 1);
        segments.push_back(std::move(seg));
    }

    const json& t = doc["transformer"];
    Transformer trafo;
    trafo.rating_kva = required<double>(t, "rating_kva", "transformer");
    trafo.lv_bus = required<int>(t, "lv_bus", "transformer");
    trafo.impedance_ohm = required<double>(t, "impedance_ohm", "transformer");
    trafo.x_r_ratio = t.value("x_r_ratio", trafo.x_r_ratio);
    trafo.replacement_cost = t.value("replacement_cost_eur", trafo.replacement_cost);

    std::vector<LineType> catalog;
    for (const json& c : doc["catalog"]) {
        LineType lt;
        lt.name = required<std::string>(c, "name", "catalog entry");
        const std::string ctx = "line type '" + lt.name + "'";
        lt.r_per_km = required<double>(c, "r_per_km", ctx);
        lt.x_per_km = required<double>(c, "x_per_km", ctx);
        lt.ampacity = required<double>(c, "ampacity", ctx);
        lt.acquisition_cost = c.value("acquisition_cost", 0.0);
        catalog.push_back(std::move(lt));
    }
    return GridNetwork(std::move(buses), std::move(segments), std::move(trafo), std::move(catalog));
}

GridNetwork load_grid(const std::filesystem::path& path) { return parse_grid(detail::read_text_file(path)); }

std::string grid_to_json(const GridNetwork& grid) {
    json doc;
    doc["buses"] = json::array();
    for (const Bus& b : grid.buses())
        doc["buses"].push_back({{"id", b.id},
                                {"name", b.name},
                                {"kind", b.kind == BusKind::Slack ? "slack" : "load"},
                                {"v_nominal_v", b.v_nominal}});
    doc["segments"] = json::array();
    for (const LineSegment& s : grid.segments())
        doc["segments"].push_back({{"from", s.from_bus},
                                   {"to", s.to_bus},
                                   {"length_km", s.length_km},
                                   {"type", s.line_type},
                                   {"n_parallel", s.n_parallel}});
    const Transformer& t = grid.transformer();
    doc["transformer"] = {{"rating_kva", t.rating_kva},
                          {"lv_bus", t.lv_bus},
                          {"impedance_ohm", t.impedance_ohm},
                          {"x_r_ratio", t.x_r_ratio},
                          {"replacement_cost_eur", t.replacement_cost}};
    doc["catalog"] = json::array();
    for (const LineType& c : grid.catalog())
        doc["catalog"].push_back({{"name", c.name},
                                  {"r_per_km", c.r_per_km},
                                  {"x_per_km", c.x_per_km},
                                  {"ampacity", c.ampacity},
                                  {"acquisition_cost", c.acquisition_cost}});
    return doc.dump(2) + "\n";
}

std::vector<Branch> branches(const GridNetwork& grid) {
    std::vector<Branch> result;
    for (int root : grid.children(grid.slack())) {
        Branch br;
        br.root = root;
        const int start = grid.preorder_position(root);
        for (int i = start; i < start + grid.subtree_size(root); ++i) {
            const int b = grid.preorder()[static_cast<size_t>(i)];
            br.buses.push_back(b);
            br.segments.push_back(grid.parent_segment(b));
        }
        result.push_back(std::move(br));
    }
    return result;
}

int branch_of(const std::vector<Branch>& all, int bus) {
    for (size_t i = 0; i < all.size(); ++i)
        if (std::find(all[i].buses.begin(), all[i].buses.end(), bus) != all[i].buses.end()) return static_cast<int>(i);
    return -1;
}

std::vector<int> path_to_slack(const GridNetwork& grid, int bus) {
    if (bus < 0 || bus >= grid.bus_count()) throw GridError("unknown bus id " + std::to_string(bus));
    std::vector<int> path;
    for (int b = bus; b != grid.slack(); b = grid.parent_bus(b)) path.push_back(grid.parent_segment(b));
    std::reverse(path.begin(), path.end());
    return path;
}

Timestamp parse_timestamp(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char tail[16] = {0};
    const int fields = std::sscanf(text.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%2d%15s", &y, &mo, &d, &h, &mi, &s, tail);
    if (fields < 5) throw GridError("parse error: bad timestamp '" + text + "'");
    const std::string rest(tail);
    if (!rest.empty() && rest != "Z" && rest != "+00:00")
        throw GridError("parse error: only UTC timestamps are supported: '" + text + "'");
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw GridError("parse error: bad timestamp '" + text + "'");
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss<seconds> hms{t - day_point};
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buffer;
}

InjectionSeries::InjectionSeries(std::vector<Timestamp> timestamps, Eigen::MatrixXd load_kw,
                                 Eigen::MatrixXd generation_kw)
    : timestamps_(std::move(timestamps)), load_(std::move(load_kw)), generation_(std::move(generation_kw)) {
    const auto rows = static_cast<Eigen::Index>(timestamps_.size());
    if (load_.rows() != rows || generation_.rows() != rows || load_.cols() != generation_.cols())
        throw GridError("injection series: inconsistent dimensions");
    if ((load_.array() < 0.0).any()) throw GridError("injection series: negative load");
    if ((generation_.array() < 0.0).any()) throw GridError("injection series: negative generation");
    for (size_t i = 1; i < timestamps_.size(); ++i)
        if (timestamps_[i] - timestamps_[i - 1] != std::chrono::hours{1})
            throw GridError("injection series: timestamps must be hourly at row " + std::to_string(i) + " (" +
                            format_timestamp(timestamps_[i]) + ")");
}

InjectionSeries InjectionSeries::window(int start, int length) const {
    if (start < 0 || length < 0 || start + length > hours()) throw GridError("injection window out of range");
    std::vector<Timestamp> ts(timestamps_.begin() + start, timestamps_.begin() + start + length);
    return InjectionSeries(std::move(ts), load_.middleRows(start, length), generation_.middleRows(start, length));
}

InjectionSeries InjectionSeries::with_generation(Eigen::MatrixXd generation_kw) const {
    return InjectionSeries(timestamps_, load_, std::move(generation_kw));
}

InjectionSeries parse_injections(const std::string& csv_text, int bus_count) {
    const auto lines = detail::split_lines(csv_text);
    if (lines.empty()) throw GridError("parse error: empty injection CSV");
    const auto header = detail::split_fields(lines.front());
    if (header.empty() || header.front() != "timestamp") throw GridError("parse error: injection CSV must start with 'timestamp'");

    struct Column {
        int bus;
        bool generation;
    };
    std::vector<Column> columns;
    for (size_t c = 1; c < header.size(); ++c) {
        const std::string& h = header[c];
        const bool is_gen = h.ends_with("_gen_kw");
        const bool is_load = h.ends_with("_load_kw");
        const size_t suffix = is_gen ? 7 : 8;
        int bus = -1;
        if (!h.starts_with("bus_") || !(is_gen || is_load) || h.size() <= 4 + suffix)
            throw GridError("parse error: bad injection column '" + h + "'");
        const std::string digits = h.substr(4, h.size() - 4 - suffix);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), bus);
        if (ec != std::errc() || ptr != digits.data() + digits.size())
            throw GridError("parse error: bad injection column '" + h + "'");
        if (bus < 0 || bus >= bus_count) throw GridError("injection column '" + h + "' references unknown bus");
        columns.push_back({bus, is_gen});
    }

    const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(rows, bus_count);
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(rows, bus_count);
    std::vector<Timestamp> ts;
    ts.reserve(static_cast<size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto fields = detail::split_fields(lines[static_cast<size_t>(r + 1)]);
        if (fields.size() != header.size())
            throw GridError("parse error: injection CSV row " + std::to_string(r + 2) + " has wrong field count");
        ts.push_back(parse_timestamp(fields[0]));
        for (size_t c = 0; c < columns.size(); ++c) {
            const double v = detail::parse_double(fields[c + 1], "injection CSV row " + std::to_string(r + 2));
            (columns[c].generation ? gen : load)(r, columns[c].bus) = v;
        }
    }
    return InjectionSeries(std::move(ts), std::move(load), std::move(gen));
}

InjectionSeries load_injections(const std::filesystem::path& path, int bus_count) {
    return parse_injections(detail::read_text_file(path), bus_count);
}

std::string injections_to_csv(const InjectionSeries& series) {
    std::ostringstream out;
    out << "timestamp";
    for (int b = 0; b < series.buses(); ++b) out << ",bus_" << b << "_load_kw,bus_" << b << "_gen_kw";
    out << "\n";
    for (int t = 0; t < series.hours(); ++t) {
        out << format_timestamp(series.timestamps()[static_cast<size_t>(t)]);
        for (int b = 0; b < series.buses(); ++b)
            out << ',' << detail::format_double(series.load_kw()(t, b)) << ','
                << detail::format_double(series.generation_kw()(t, b));
        out << "\n";
    }
    return out.str();
}

}  // namespace gridplan
