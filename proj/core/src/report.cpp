#include "iegds/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace iegds::report {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

nlohmann::json outcome_to_json(const dispatch::Outcome& o, bool include_strategy) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& r : o.trace)
        trace.push_back({{"ell", r.ell},
                         {"rho", r.rho},
                         {"rho_lo", r.rho_lo},
                         {"rho_hi", finite_or_null(r.rho_hi)},
                         {"violation", r.violation},
                         {"tau_max", r.tau_max},
                         {"J", r.J},
                         {"potential", r.potential},
                         {"violated", r.violated},
                         {"stage1_status", r.stage1_status},
                         {"stage1_iterations", r.stage1_iterations},
                         {"stage1_seconds", r.stage1_seconds}});
    nlohmann::json devs = nlohmann::json::array();
    for (const auto& d : o.deviations)
        devs.push_back({{"pipe", d.pipe + 1},
                        {"from", d.from},
                        {"to", d.to},
                        {"h", d.h},
                        {"phi", d.phi},
                        {"weymouth", d.weymouth},
                        {"delta", d.delta},
                        {"undefined_reference", d.undefined_reference}});
    nlohmann::json fams = nlohmann::json::array();
    for (const auto& f : o.residuals.families)
        fams.push_back({{"family", f.family}, {"count", f.count}, {"max_violation", f.max_violation}});
    nlohmann::json j{
        {"schema", kOutcomeSchema},
        {"model", o.model},
        {"status", dispatch::to_string(o.status)},
        {"ell_bar", o.ell_bar},
        {"rho_bar", o.rho_bar},
        {"epsilon", o.epsilon ? nlohmann::json(*o.epsilon) : nlohmann::json(nullptr)},
        {"epsilon_certified", o.epsilon.has_value()},
        {"epsilon_pct", o.epsilon ? nlohmann::json(o.epsilon_pct) : nlohmann::json(nullptr)},
        {"potential_first", o.potential_first},
        {"potential", o.potential},
        {"violation", o.violation},
        {"mean_abs_cost", o.mean_abs_cost},
        {"mean_abs_deviation", o.mean_abs_dev},
        {"undefined_deviations", o.undefined_deviations},
        {"seconds", o.seconds},
        {"tree", o.tree},
        {"residuals",
         {{"tolerance", o.residuals.tolerance},
          {"max_violation", o.residuals.max_violation},
          {"integrality_gap", o.residuals.integrality_gap},
          {"feasible", o.residuals.feasible},
          {"integral", o.residuals.integral},
          {"families", std::move(fams)}}},
        {"trace", std::move(trace)},
        {"deviations", std::move(devs)},
        {"warnings", o.warnings},
    };
    if (include_strategy) {
        nlohmann::json delta = nlohmann::json::array();
        for (int l = 0; l < o.delta.rows(); ++l) {
            std::vector<int> row(o.delta.cols());
            for (int h = 0; h < o.delta.cols(); ++h) row[h] = o.delta(l, h);
            delta.push_back(row);
        }
        j["strategy"] = {{"u", std::vector<double>(o.u.data(), o.u.data() + o.u.size())}, {"delta", delta}};
    }
    return j;
}

void write_trace_csv(std::ostream& os, const std::vector<dispatch::IterationRecord>& trace) {
    os << kTraceColumns << '\n';
    for (const auto& r : trace)
        os << r.ell << ',' << num(r.rho) << ',' << num(r.rho_lo) << ',' << num(r.rho_hi) << ',' << num(r.violation)
           << ',' << num(r.tau_max) << ',' << num(r.J) << ',' << num(r.potential) << ',' << (r.violated ? 1 : 0)
           << ',' << r.stage1_status << ',' << r.stage1_iterations << ',' << num(r.stage1_seconds) << '\n';
}

void write_deviations_csv(std::ostream& os, const std::vector<dispatch::Deviation>& devs) {
    os << kDeviationColumns << '\n';
    for (const auto& d : devs)
        os << d.pipe + 1 << ',' << d.from << ',' << d.to << ',' << d.h << ',' << num(d.phi) << ','
           << num(d.weymouth) << ',' << num(d.delta) << ',' << (d.undefined_reference ? 1 : 0) << '\n';
}

void write_baselines_csv(std::ostream& os, const std::vector<dispatch::BaselineOutcome>& rows) {
    os << kBaselineColumns << '\n';
    for (const auto& b : rows)
        os << dispatch::to_string(b.kind) << ',' << (b.solved ? 1 : 0) << ',' << b.rounds << ',' << num(b.potential)
           << ',' << num(b.objective) << ',' << num(b.max_cone_slack) << ',' << num(b.mean_abs_dev) << ','
           << b.undefined_deviations << ',' << num(b.seconds) << ',' << csv_text(b.note) << '\n';
}

CaseRow case_row(std::uint64_t seed, const dispatch::Outcome& o) {
    CaseRow r;
    r.seed = seed;
    r.model = o.model;
    r.status = dispatch::to_string(o.status);
    r.epsilon = o.epsilon;
    r.epsilon_pct = o.epsilon_pct;
    r.mean_abs_cost = o.mean_abs_cost;
    r.rho_bar = o.rho_bar;
    r.ell_bar = o.ell_bar;
    r.iterations = static_cast<int>(o.trace.size());
    r.violation = o.violation;
    r.mean_abs_dev = o.mean_abs_dev;
    r.undefined_deviations = o.undefined_deviations;
    r.seconds = o.seconds;
    return r;
}

CaseRow error_row(std::uint64_t seed, const std::string& model, const std::string& message) {
    CaseRow r;
    r.seed = seed;
    r.model = model;
    r.status = "error";
    r.error = message;
    return r;
}

FiveNumber five_number(std::vector<double> v) {
    FiveNumber f;
    f.n = static_cast<int>(v.size());
    if (v.empty()) return f;
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
        const double pos = p * (v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - lo) * (v[hi] - v[lo]);
    };
    f.min = v.front();
    f.q1 = q(0.25);
    f.median = q(0.5);
    f.q3 = q(0.75);
    f.max = v.back();
    return f;
}

nlohmann::json to_json(const FiveNumber& f) {
    return {{"n", f.n}, {"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};
}

double BatchSummary::success_rate() const {
    if (rows.empty()) return 0.0;
    const auto ok = std::count_if(rows.begin(), rows.end(), [](const CaseRow& r) { return r.success(); });
    return static_cast<double>(ok) / rows.size();
}

double BatchSummary::success_rate(const std::string& model) const {
    int n = 0, ok = 0;
    for (const auto& r : rows)
        if (r.model == model) {
            ++n;
            ok += r.success();
        }
    return n ? static_cast<double>(ok) / n : 0.0;
}

void write_summary_csv(std::ostream& os, const BatchSummary& s) {
    os << kSummaryColumns << '\n';
    for (const auto& r : s.rows)
        os << r.seed << ',' << r.model << ',' << r.status << ',' << (r.epsilon ? num(*r.epsilon) : "") << ','
           << (r.epsilon ? num(r.epsilon_pct) : "") << ',' << num(r.mean_abs_cost) << ',' << num(r.rho_bar) << ',' << r.ell_bar << ','
           << r.iterations << ',' << num(r.violation) << ',' << num(r.mean_abs_dev) << ','
           << r.undefined_deviations << ',' << num(r.seconds) << ',' << csv_text(r.error) << '\n';
}

std::vector<ModelStats> model_stats(const BatchSummary& s) {
    std::vector<ModelStats> out;
    for (const auto& m : s.models) {
        ModelStats st;
        st.model = m;
        std::vector<double> eps, rho, sec, dev;
        for (const auto& r : s.rows) {
            if (r.model != m) continue;
            ++st.cases;
            if (r.status == "error") continue;
            sec.push_back(r.seconds);
            dev.push_back(r.mean_abs_dev);
            if (!r.success()) continue;
            ++st.successes;
            rho.push_back(r.rho_bar);
            if (r.epsilon) eps.push_back(r.epsilon_pct);
        }
        st.epsilon_pct = five_number(eps);
        st.rho_bar = five_number(rho);
        st.seconds = five_number(sec);
        st.mean_abs_dev = five_number(dev);
        double acc = 0.0;
        for (double d : dev) acc += d;
        st.mean_of_mean_abs_dev = dev.empty() ? 0.0 : acc / dev.size();
        out.push_back(std::move(st));
    }
    return out;
}

nlohmann::json summary_to_json(const BatchSummary& s) {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& r : s.rows) {
        nlohmann::json c{{"case", r.seed},
                         {"model", r.model},
                         {"status", r.status},
                         {"epsilon", r.epsilon ? nlohmann::json(*r.epsilon) : nlohmann::json(nullptr)},
                         {"epsilon_pct", r.epsilon ? nlohmann::json(r.epsilon_pct) : nlohmann::json(nullptr)},
                         {"mean_abs_cost", r.mean_abs_cost},
                         {"rho_bar", r.rho_bar},
                         {"ell_bar", r.ell_bar},
                         {"iterations", r.iterations},
                         {"violation", r.violation},
                         {"mean_abs_dev", r.mean_abs_dev},
                         {"undefined_deviations", r.undefined_deviations},
                         {"seconds", r.seconds}};
        if (!r.error.empty()) c["error"] = r.error;
        cases.push_back(std::move(c));
    }
    nlohmann::json per_model = nlohmann::json::object();
    for (const auto& st : model_stats(s))
        per_model[st.model] = {{"cases", st.cases},
                               {"successes", st.successes},
                               {"success_rate", s.success_rate(st.model)},
                               {"epsilon_pct", to_json(st.epsilon_pct)},
                               {"rho_bar", to_json(st.rho_bar)},
                               {"seconds", to_json(st.seconds)},
                               {"mean_abs_dev", to_json(st.mean_abs_dev)},
                               {"mean_of_mean_abs_dev", st.mean_of_mean_abs_dev}};
    return {{"schema", kSummarySchema},
            {"network", s.network},
            {"horizon", s.horizon},
            {"seeds", s.seeds},
            {"models", s.models},
            {"cases", std::move(cases)},
            {"aggregate", {{"success_rate", s.success_rate()}, {"models", std::move(per_model)}}}};
}

BatchSummary summary_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != kSummarySchema)
            throw std::invalid_argument("not a summary document: schema is " + j.at("schema").dump());
        BatchSummary s;
        s.network = j.at("network").get<std::string>();
        s.horizon = j.at("horizon").get<int>();
        s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        s.models = j.at("models").get<std::vector<std::string>>();
        for (const auto& c : j.at("cases")) {
            CaseRow r;
            r.seed = c.at("case").get<std::uint64_t>();
            r.model = c.at("model").get<std::string>();
            r.status = c.at("status").get<std::string>();
            if (!c.at("epsilon").is_null()) r.epsilon = c.at("epsilon").get<double>();
            if (!c.at("epsilon_pct").is_null()) r.epsilon_pct = c.at("epsilon_pct").get<double>();
            r.mean_abs_cost = c.at("mean_abs_cost").get<double>();
            r.rho_bar = c.at("rho_bar").get<double>();
            r.ell_bar = c.at("ell_bar").get<int>();
            r.iterations = c.at("iterations").get<int>();
            r.violation = c.at("violation").get<double>();
            r.mean_abs_dev = c.at("mean_abs_dev").get<double>();
            r.undefined_deviations = c.at("undefined_deviations").get<int>();
            r.seconds = c.at("seconds").get<double>();
            r.error = c.value("error", "");
            s.rows.push_back(std::move(r));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed summary: ") + e.what());
    }
}

void check_compatible(const std::vector<BatchSummary>& sums) {
    for (std::size_t k = 1; k < sums.size(); ++k) {
        const auto& a = sums[0];
        const auto& b = sums[k];
        if (a.network != b.network) throw std::invalid_argument("summaries use different networks");
        if (a.horizon != b.horizon) throw std::invalid_argument("summaries use different horizons");
        auto sa = a.seeds, sb = b.seeds;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) throw std::invalid_argument("summaries cover different case sets");
        auto ma = a.models, mb = b.models;
        std::sort(ma.begin(), ma.end());
        std::sort(mb.begin(), mb.end());
        if (ma != mb) throw std::invalid_argument("summaries cover different models");
    }
}

void write_comparison_csv(std::ostream& os, const std::vector<std::string>& names,
                          const std::vector<BatchSummary>& sums) {
    os << "summary,model,cases,success_rate,epsilon_pct_median,rho_bar_median,seconds_median,mean_abs_dev,"
          "delta_success_rate,delta_epsilon_pct_median,delta_rho_bar_median,delta_mean_abs_dev\n";
    if (sums.empty()) return;
    std::map<std::string, ModelStats> ref;
    for (auto& st : model_stats(sums[0])) ref[st.model] = st;
    for (std::size_t k = 0; k < sums.size(); ++k)
        for (const auto& st : model_stats(sums[k])) {
            const auto& r = ref.at(st.model);
            const double sr = sums[k].success_rate(st.model);
            os << csv_text(names[k]) << ',' << st.model << ',' << st.cases << ',' << num(sr) << ','
               << num(st.epsilon_pct.median) << ',' << num(st.rho_bar.median) << ',' << num(st.seconds.median)
               << ',' << num(st.mean_of_mean_abs_dev) << ',' << num(sr - sums[0].success_rate(st.model)) << ','
               << num(st.epsilon_pct.median - r.epsilon_pct.median) << ','
               << num(st.rho_bar.median - r.rho_bar.median) << ','
               << num(st.mean_of_mean_abs_dev - r.mean_of_mean_abs_dev) << '\n';
        }
}

nlohmann::json boxplot_json(const std::vector<std::string>& names, const std::vector<BatchSummary>& sums) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t k = 0; k < sums.size(); ++k)
        for (const auto& st : model_stats(sums[k]))
            out.push_back({{"summary", names[k]},
                           {"model", st.model},
                           {"epsilon_pct", to_json(st.epsilon_pct)},
                           {"rho_bar", to_json(st.rho_bar)},
                           {"seconds", to_json(st.seconds)},
                           {"mean_abs_dev", to_json(st.mean_abs_dev)}});
    return {{"boxplots", std::move(out)}};
}

}  // namespace iegds::report
