#ifndef NLSIP_FIELD_IO_HPP
#define NLSIP_FIELD_IO_HPP

#include <cstddef>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "radial_field.hpp"

namespace nlsip {

using json = nlohmann::json;

/// CSV with header "r,re,im", one row per node.
inline void write_csv(std::ostream& os, const RadialField& u) {
    os << "r,re,im\n" << std::setprecision(17);
    for (std::size_t j = 0; j < u.size(); ++j)
        os << u.grid().node(j) << ',' << u[j].real() << ',' << u[j].imag() << '\n';
}

inline json to_json(const RadialField& u) {
    const auto& g = u.grid();
    json samples = json::array();
    for (const auto& v : u.values()) samples.push_back({v.real(), v.imag()});
    json j = {{"d", g.dimension()},
              {"c", g.params().c},
              {"r_max", g.r_max()},
              {"n", g.size()},
              {"scheme", std::string(to_string(g.scheme()))},
              {"samples", std::move(samples)}};
    if (g.scheme() == GridScheme::graded) j["r_min"] = g.r_min();
    if (u.behavior().kind == BoundaryBehavior::Kind::indicial)
        j["boundary"] = {{"kind", "indicial"}, {"sigma", u.behavior().sigma}};
    return j;
}

inline RadialField field_from_json(const json& j) {
    try {
        const ProblemParams p{j.at("d").get<int>(), j.at("c").get<double>()};
        const auto scheme = parse_scheme(j.at("scheme").get<std::string>());
        std::optional<double> r_min;
        if (j.contains("r_min")) r_min = j.at("r_min").get<double>();
        auto grid = RadialGrid::build(p, j.at("r_max").get<double>(), j.at("n").get<std::size_t>(),
                                      scheme, r_min);
        std::vector<cplx> v;
        v.reserve(grid->size());
        for (const auto& s : j.at("samples")) v.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
        BoundaryBehavior b;
        if (j.contains("boundary") && j["boundary"].at("kind") == "indicial")
            b = BoundaryBehavior::indicial(j["boundary"].at("sigma").get<double>());
        return RadialField(std::move(grid), std::move(v), b);
    } catch (const json::exception& e) {
        fail(errc::config, std::string("malformed field record: ") + e.what());
    }
}

inline void save_csv(const std::string& path, const RadialField& u) {
    std::ofstream os(path);
    require(static_cast<bool>(os), errc::config, "cannot write " + path);
    write_csv(os, u);
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    require(static_cast<bool>(os), errc::config, "cannot write " + path);
    os << j.dump(2) << '\n';
}

inline json load_json(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), errc::config, "cannot read " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        fail(errc::config, path + ": " + e.what());
    }
}

} // namespace nlsip

#endif
