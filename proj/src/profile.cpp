#include "dring/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "dring/io.hpp"

namespace dring::profile {

namespace {

double clamp_category(double v, const WeightBounds& b) {
    return std::min(std::max(v, b.zeta_min), b.zeta_max);
}

double clamp_component(double v, const WeightBounds& b) {
    return std::min(v, b.zeta_max);
}

std::string fmt_weight(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

// max element-wise difference across all three weight maps, absent keys
// reading as zero
double profile_distance(const InterestProfile& a, const InterestProfile& b) {
    double best = 0;
    auto scan = [&best](const std::map<std::string, double>& x,
                        const std::map<std::string, double>& y) {
        for (const auto& [k, v] : x) {
            auto it = y.find(k);
            best = std::max(best,
                            std::abs(v - (it == y.end() ? 0.0 : it->second)));
        }
        for (const auto& [k, v] : y)
            if (x.find(k) == x.end()) best = std::max(best, std::abs(v));
    };
    scan(a.weights, b.weights);
    scan(a.browsing_weights, b.browsing_weights);
    scan(a.interaction_weights, b.interaction_weights);
    return best;
}

}  // namespace

std::string state_name(State s) {
    switch (s) {
        case State::Initiation: return "Initiation";
        case State::Stable: return "Stable";
        case State::Evolution: return "Evolution";
    }
    return "Initiation";
}

State parse_state(std::string_view name) {
    if (name == "Initiation") return State::Initiation;
    if (name == "Stable") return State::Stable;
    if (name == "Evolution") return State::Evolution;
    throw ProfileError("parse_state: unknown state " + std::string(name));
}

std::string CategoryMap::resolve(const Service& s) const {
    auto it = table.find(s.category);
    if (it != table.end()) return it->second;
    if (fallback && !fallback->empty()) {
        try {
            return tfidf::map_keywords(s.keywords, *fallback);
        } catch (const tfidf::NoPositiveMatch&) {
        }
    }
    throw UnmappableCategory("CategoryMap: cannot resolve category " +
                             s.category + " for service " + s.id_string());
}

InterestProfile establish_profile(const ContextProfile& ctx,
                                  const CategoryMap& mapping,
                                  const WeightBounds& bounds,
                                  std::int64_t timestamp) {
    bounds.validate();
    if (ctx.services.empty())
        throw EmptyContext("establish_profile: context has no services");

    std::map<std::string, std::size_t> counts;
    for (const auto& s : ctx.services) ++counts[mapping.resolve(s)];

    InterestProfile p;
    p.bounds = bounds;
    p.timestamp = timestamp;
    p.state = State::Initiation;
    const double total = static_cast<double>(ctx.services.size());
    for (const auto& [cat, n] : counts)
        p.weights[cat] =
            clamp_category(static_cast<double>(n) / total, bounds);
    return p;
}

InterestProfile apply_activity(
    const InterestProfile& p, const std::map<std::string, double>& browsing,
    const std::map<std::string, double>& interactions,
    const WeightBounds& bounds) {
    bounds.validate();
    for (const auto& m : {&browsing, &interactions})
        for (const auto& [k, v] : *m)
            if (!(v > 0.0 && v <= bounds.zeta_max))
                throw WeightOutOfBounds(
                    "apply_activity: component weight for " + k +
                    " outside (0, zeta_max]");

    InterestProfile out = p;
    out.bounds = bounds;
    // a component keyed like an existing category reinforces that
    // category's weight; the component map keeps its own entry either way
    auto fold = [&](const std::map<std::string, double>& src,
                    std::map<std::string, double>& component) {
        for (const auto& [k, v] : src) {
            auto w = out.weights.find(k);
            if (w != out.weights.end())
                w->second = clamp_category(w->second + v, bounds);
            auto c = component.find(k);
            component[k] = clamp_component(
                (c == component.end() ? 0.0 : c->second) + v, bounds);
        }
    };
    fold(browsing, out.browsing_weights);
    fold(interactions, out.interaction_weights);
    if (profile_distance(p, out) > 0) out.state = State::Evolution;
    return out;
}

InterestProfile evolve(const InterestProfile& p, const ProfileDelta& d,
                       std::int64_t slot_seconds) {
    for (const auto& m :
         {&d.category_changes, &d.browsing_changes, &d.interaction_changes})
        for (const auto& [k, c] : *m)
            if (!(c > 0.0 && c <= d.max_change))
                throw WeightOutOfBounds("evolve: change for " + k +
                                        " violates (0, cap]");
    if (d.slot <= p.slot(slot_seconds))
        throw StaleDelta("evolve: delta slot " + std::to_string(d.slot) +
                         " not after profile slot " +
                         std::to_string(p.slot(slot_seconds)));

    InterestProfile out = p;
    for (const auto& [k, c] : d.category_changes) {
        auto it = out.weights.find(k);
        out.weights[k] = clamp_category(
            (it == out.weights.end() ? 0.0 : it->second) + c, p.bounds);
    }
    auto fold = [&](const std::map<std::string, double>& src,
                    std::map<std::string, double>& dst) {
        for (const auto& [k, c] : src) {
            auto it = dst.find(k);
            dst[k] = clamp_component((it == dst.end() ? 0.0 : it->second) + c,
                                     p.bounds);
        }
    };
    fold(d.browsing_changes, out.browsing_weights);
    fold(d.interaction_changes, out.interaction_weights);
    out.timestamp = d.slot * slot_seconds;
    if (profile_distance(p, out) > 0) out.state = State::Evolution;
    return out;
}

InterestProfile incorporate_usage(const InterestProfile& p,
                                  const UsageRecord& u,
                                  const ContextProfile& ctx,
                                  const CategoryMap& mapping) {
    std::map<std::string, double> per_category;
    for (const auto& [sid, frac] : u.per_service_usage) {
        if (!(frac >= 0.0 && frac <= 1.0))
            throw WeightOutOfBounds("incorporate_usage: fraction for " + sid +
                                    " outside [0,1]");
        if (frac == 0.0) continue;
        const Service* svc = nullptr;
        for (const auto& s : ctx.services)
            if (s.id_string() == sid) {
                svc = &s;
                break;
            }
        if (!svc)
            throw UnmappableCategory("incorporate_usage: service " + sid +
                                     " not in context");
        per_category[mapping.resolve(*svc)] += frac;
    }

    InterestProfile out = p;
    for (const auto& [cat, add] : per_category) {
        auto it = out.weights.find(cat);
        out.weights[cat] = clamp_category(
            (it == out.weights.end() ? 0.0 : it->second) + add, p.bounds);
    }
    if (profile_distance(p, out) > 0) out.state = State::Evolution;
    return out;
}

State detect_state(std::span<const InterestProfile> history, double tol,
                   std::size_t window) {
    if (history.empty())
        throw std::invalid_argument("detect_state: empty history");
    if (history.size() == 1) return State::Initiation;
    if (window == 0) throw std::invalid_argument("detect_state: zero window");
    const std::size_t updates = std::min(window, history.size() - 1);
    double worst = 0;
    for (std::size_t i = history.size() - updates; i < history.size(); ++i)
        worst = std::max(worst, profile_distance(history[i - 1], history[i]));
    return worst <= tol ? State::Stable : State::Evolution;
}

std::string to_text(const InterestProfile& p,
                    const std::map<std::string, std::string>& extra_meta) {
    std::string out = "DRPROFILE 1\n";
    out += "meta\ttimestamp\t" + std::to_string(p.timestamp) + "\n";
    out += "meta\tstate\t" + state_name(p.state) + "\n";
    out += "meta\tzeta_min\t" + fmt_weight(p.bounds.zeta_min) + "\n";
    out += "meta\tzeta_max\t" + fmt_weight(p.bounds.zeta_max) + "\n";
    for (const auto& [k, v] : extra_meta) out += "meta\t" + k + "\t" + v + "\n";
    // kinds emitted in lexicographic order: brw < cat < int
    for (const auto& [k, v] : p.browsing_weights)
        out += "brw\t" + k + "\t" + fmt_weight(v) + "\n";
    for (const auto& [k, v] : p.weights)
        out += "cat\t" + k + "\t" + fmt_weight(v) + "\n";
    for (const auto& [k, v] : p.interaction_weights)
        out += "int\t" + k + "\t" + fmt_weight(v) + "\n";
    return out;
}

InterestProfile from_text(std::string_view text,
                          std::map<std::string, std::string>* extra_meta) {
    InterestProfile p;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (first) {
            if (line != "DRPROFILE 1")
                throw ProfileError("from_text: bad header");
            first = false;
            continue;
        }
        auto t1 = line.find('\t');
        auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string_view::npos || t2 == std::string_view::npos)
            throw ProfileError("from_text: malformed line");
        std::string kind(line.substr(0, t1));
        std::string key(line.substr(t1 + 1, t2 - t1 - 1));
        std::string value(line.substr(t2 + 1));
        if (kind == "meta") {
            if (key == "timestamp")
                p.timestamp = std::stoll(value);
            else if (key == "state")
                p.state = parse_state(value);
            else if (key == "zeta_min")
                p.bounds.zeta_min = std::stod(value);
            else if (key == "zeta_max")
                p.bounds.zeta_max = std::stod(value);
            else if (extra_meta)
                (*extra_meta)[key] = value;
        } else if (kind == "cat") {
            p.weights[key] = std::stod(value);
        } else if (kind == "brw") {
            p.browsing_weights[key] = std::stod(value);
        } else if (kind == "int") {
            p.interaction_weights[key] = std::stod(value);
        } else {
            throw ProfileError("from_text: unknown kind " + kind);
        }
    }
    if (first) throw ProfileError("from_text: empty input");
    p.bounds.validate();
    return p;
}

ContextProfile load_context(const std::string& path) {
    const std::string text = read_file(path);
    ContextProfile ctx;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (first) {
            if (line != "DRCONTEXT 1")
                throw IoError(path + ": bad context header");
            first = false;
            continue;
        }
        auto t1 = line.find('\t');
        auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw IoError(path + ": malformed context line");
        Service svc;
        const std::string id = line.substr(0, t1);
        auto dot = id.find('.');
        if (dot == std::string::npos)
            throw IoError(path + ": bad service id " + id);
        svc.id.first = static_cast<std::uint32_t>(std::stoul(id.substr(0, dot)));
        svc.id.second =
            static_cast<std::uint32_t>(std::stoul(id.substr(dot + 1)));
        svc.category = line.substr(t1 + 1, t2 - t1 - 1);
        std::string kw = line.substr(t2 + 1), cur;
        for (char c : kw) {
            if (c == ' ') {
                if (!cur.empty()) svc.keywords.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) svc.keywords.push_back(cur);
        ctx.services.push_back(std::move(svc));
    }
    if (first) throw IoError(path + ": empty context file");
    return ctx;
}

void save_context(const ContextProfile& ctx, const std::string& path) {
    std::string out = "DRCONTEXT 1\n";
    for (const auto& s : ctx.services) {
        out += s.id_string() + '\t' + s.category + '\t';
        for (std::size_t i = 0; i < s.keywords.size(); ++i) {
            if (i) out += ' ';
            out += s.keywords[i];
        }
        out += '\n';
    }
    write_file(path, out);
}

void save_profile(const InterestProfile& p, const std::string& path,
                  const std::map<std::string, std::string>& extra_meta) {
    write_file(path, to_text(p, extra_meta));
}

InterestProfile load_profile(const std::string& path,
                             std::map<std::string, std::string>* extra_meta) {
    try {
        return from_text(read_file(path), extra_meta);
    } catch (const ProfileError& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace dring::profile
