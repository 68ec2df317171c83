#include "kce/kernels.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace kce {

std::string_view family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::linear: return "linear";
        case KernelFamily::poly: return "poly";
        case KernelFamily::rbf: return "rbf";
        case KernelFamily::laplace: return "laplace";
        case KernelFamily::sigmoid: return "sigmoid";
        case KernelFamily::combination: return "combination";
    }
    return "unknown";
}

namespace {

KernelFamily family_from_name(std::string_view name) {
    for (auto f : {KernelFamily::linear, KernelFamily::poly, KernelFamily::rbf, KernelFamily::laplace,
                   KernelFamily::sigmoid, KernelFamily::combination}) {
        if (family_name(f) == name) return f;
    }
    throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw InvalidArgument("kernel spec: bad number '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

// Splits on `sep` at bracket depth zero.
std::vector<std::string_view> split_top(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    out.push_back(trim(s.substr(start)));
    return out;
}

KernelSpec base_spec(KernelFamily family, const std::vector<std::string_view>& params) {
    KernelSpec spec;
    spec.family = family;
    spec.gamma = 1.0;
    spec.alpha_offset = 0.0;
    spec.degree = family == KernelFamily::poly ? 2 : 1;
    for (auto p : params) {
        const auto eq = p.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidArgument("kernel spec: expected key=value, got '" + std::string(p) + "'");
        }
        const auto key = p.substr(0, eq);
        const auto value = p.substr(eq + 1);
        if (key == "gamma") {
            spec.gamma = parse_number(value);
        } else if (key == "alpha") {
            spec.alpha_offset = parse_number(value);
        } else if (key == "d") {
            const double d = parse_number(value);
            if (d != std::floor(d)) throw InvalidArgument("kernel spec: degree must be an integer");
            spec.degree = static_cast<int>(d);
        } else {
            throw InvalidArgument("kernel spec: unknown key '" + std::string(key) + "'");
        }
    }
    return spec;
}

std::string params_text(const KernelSpec& s) {
    std::string out;
    switch (s.family) {
        case KernelFamily::poly:
            out = "gamma=" + format_double(s.gamma) + " alpha=" + format_double(s.alpha_offset) +
                  " d=" + std::to_string(s.degree);
            break;
        case KernelFamily::rbf:
        case KernelFamily::laplace:
            out = "gamma=" + format_double(s.gamma);
            break;
        case KernelFamily::sigmoid:
            out = "gamma=" + format_double(s.gamma) + " alpha=" + format_double(s.alpha_offset);
            break;
        default:
            break;
    }
    return out;
}

std::string component_text(const KernelSpec& s) {
    const auto params = params_text(s);
    std::string out(family_name(s.family));
    if (!params.empty()) out += "[" + params + "]";
    return out;
}

KernelSpec parse_component(std::string_view text) {
    text = trim(text);
    const auto open = text.find('[');
    if (open == std::string_view::npos) {
        return base_spec(family_from_name(text), {});
    }
    if (text.back() != ']') throw InvalidArgument("kernel spec: unbalanced '[' in component");
    const auto family = family_from_name(trim(text.substr(0, open)));
    if (family == KernelFamily::combination) {
        throw InvalidArgument("kernel spec: nested combinations are not supported");
    }
    return base_spec(family, split_ws(text.substr(open + 1, text.size() - open - 2)));
}

}  // namespace

KernelSpec KernelSpec::linear() {
    return KernelSpec{};
}

KernelSpec KernelSpec::poly(double gamma, double alpha_offset, int degree) {
    KernelSpec s;
    s.family = KernelFamily::poly;
    s.gamma = gamma;
    s.alpha_offset = alpha_offset;
    s.degree = degree;
    s.validate();
    return s;
}

KernelSpec KernelSpec::rbf(double gamma) {
    KernelSpec s;
    s.family = KernelFamily::rbf;
    s.gamma = gamma;
    s.validate();
    return s;
}

KernelSpec KernelSpec::laplace(double gamma) {
    KernelSpec s;
    s.family = KernelFamily::laplace;
    s.gamma = gamma;
    s.validate();
    return s;
}

KernelSpec KernelSpec::sigmoid(double gamma, double alpha_offset) {
    KernelSpec s;
    s.family = KernelFamily::sigmoid;
    s.gamma = gamma;
    s.alpha_offset = alpha_offset;
    s.validate();
    return s;
}

void KernelSpec::validate() const {
    switch (family) {
        case KernelFamily::linear:
            return;
        case KernelFamily::poly:
            if (degree < 1) throw InvalidArgument("poly kernel: degree must be >= 1");
            [[fallthrough]];
        case KernelFamily::sigmoid:
            if (!(alpha_offset >= 0.0)) throw InvalidArgument("kernel: alpha must be >= 0");
            [[fallthrough]];
        case KernelFamily::rbf:
        case KernelFamily::laplace:
            if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("kernel: gamma must be > 0");
            return;
        case KernelFamily::combination: {
            if (components.empty()) throw InvalidArgument("combination kernel: no components");
            double total = 0.0;
            for (const auto& c : components) {
                if (!(c.weight >= 0.0)) throw InvalidArgument("combination kernel: negative weight");
                if (c.spec.family == KernelFamily::combination) {
                    throw InvalidArgument("combination kernel: components must not be combinations");
                }
                c.spec.validate();
                total += c.weight;
            }
            if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("combination kernel: weights must sum to 1");
            return;
        }
    }
}

bool KernelSpec::is_psd_family() const {
    if (family == KernelFamily::sigmoid) return false;
    if (family == KernelFamily::combination) {
        for (const auto& c : components) {
            if (c.weight > 0.0 && !c.spec.is_psd_family()) return false;
        }
    }
    return true;
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
    return a.family == b.family && a.gamma == b.gamma && a.alpha_offset == b.alpha_offset &&
           a.degree == b.degree && a.components == b.components;
}

std::string to_string(const KernelSpec& spec) {
    if (spec.family != KernelFamily::combination) {
        const auto params = params_text(spec);
        std::string out(family_name(spec.family));
        if (!params.empty()) out += " " + params;
        return out;
    }
    bool uniform = true;
    for (const auto& c : spec.components) {
        uniform = uniform && c.weight == spec.components.front().weight;
    }
    std::string out = uniform ? "combination uniform(" : "combination weighted(";
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
        if (i) out += ",";
        if (!uniform) out += format_double(spec.components[i].weight) + ":";
        out += component_text(spec.components[i].spec);
    }
    return out + ")";
}

KernelSpec parse_kernel(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw InvalidArgument("kernel spec: empty text");
    std::size_t head_end = 0;
    while (head_end < text.size() && !std::isspace(static_cast<unsigned char>(text[head_end]))) ++head_end;
    const auto family = family_from_name(text.substr(0, head_end));
    const auto rest = trim(text.substr(head_end));

    if (family != KernelFamily::combination) {
        auto spec = base_spec(family, split_ws(rest));
        spec.validate();
        return spec;
    }

    const auto open = rest.find('(');
    if (open == std::string_view::npos || rest.back() != ')') {
        throw InvalidArgument("kernel spec: combination needs uniform(...) or weighted(...)");
    }
    const auto mode = trim(rest.substr(0, open));
    const auto body = rest.substr(open + 1, rest.size() - open - 2);
    std::vector<double> weights;
    std::vector<KernelSpec> specs;
    for (auto item : split_top(body, ',')) {
        if (mode == "uniform") {
            weights.push_back(1.0);
            specs.push_back(parse_component(item));
        } else if (mode == "weighted") {
            const auto colon = item.find(':');
            if (colon == std::string_view::npos) throw InvalidArgument("kernel spec: weighted entries need w:kernel");
            weights.push_back(parse_number(item.substr(0, colon)));
            specs.push_back(parse_component(item.substr(colon + 1)));
        } else {
            throw InvalidArgument("kernel spec: unknown combination mode '" + std::string(mode) + "'");
        }
    }
    if (mode == "uniform") return combine_uniform(std::move(specs));
    return combine(std::move(weights), std::move(specs));
}

std::vector<KernelSpec> expand_kernel_grid(std::string_view text) {
    std::vector<KernelSpec> out;
    for (auto entry : split_top(text, ';')) {
        if (entry.empty()) continue;
        // Each token either fixed or key={v1,v2,...}; expand the cartesian product in order.
        std::vector<std::vector<std::string>> choices;
        for (auto tok : split_ws(entry)) {
            const auto brace = tok.find("={");
            if (brace != std::string_view::npos && tok.back() == '}') {
                const auto key = std::string(tok.substr(0, brace));
                std::vector<std::string> opts;
                for (auto v : split_top(tok.substr(brace + 2, tok.size() - brace - 3), ',')) {
                    opts.push_back(key + "=" + std::string(v));
                }
                choices.push_back(std::move(opts));
            } else {
                choices.push_back({std::string(tok)});
            }
        }
        // Combination entries contain spaces inside brackets; parse them whole.
        if (entry.find('(') != std::string_view::npos) {
            out.push_back(parse_kernel(entry));
            continue;
        }
        std::vector<std::size_t> idx(choices.size(), 0);
        bool done = false;
        while (!done) {
            std::string text_point;
            for (std::size_t i = 0; i < choices.size(); ++i) {
                if (i) text_point += ' ';
                text_point += choices[i][idx[i]];
            }
            out.push_back(parse_kernel(text_point));
            done = true;
            for (std::size_t pos = choices.size(); pos-- > 0;) {
                if (++idx[pos] < choices[pos].size()) {
                    done = false;
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    return out;
}

std::string kernel_slug(const KernelSpec& spec) {
    std::string out(family_name(spec.family));
    switch (spec.family) {
        case KernelFamily::poly:
            out += "_g" + format_double(spec.gamma) + "_a" + format_double(spec.alpha_offset) + "_d" +
                   std::to_string(spec.degree);
            break;
        case KernelFamily::rbf:
        case KernelFamily::laplace:
            out += "_g" + format_double(spec.gamma);
            break;
        case KernelFamily::sigmoid:
            out += "_g" + format_double(spec.gamma) + "_a" + format_double(spec.alpha_offset);
            break;
        case KernelFamily::combination: {
            const auto text = to_string(spec);
            out += "_" + hex64(fnv1a64(text.data(), text.size())).substr(0, 8);
            break;
        }
        default:
            break;
    }
    return out;
}

namespace detail {

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& y) {
    switch (spec.family) {
        case KernelFamily::linear:
            return x.dot(y);
        case KernelFamily::poly:
            return std::pow(spec.gamma * x.dot(y) + spec.alpha_offset, spec.degree);
        case KernelFamily::rbf:
            return std::exp(-spec.gamma * (x - y).squaredNorm());
        case KernelFamily::laplace:
            return std::exp(-spec.gamma * (x - y).lpNorm<1>());
        case KernelFamily::sigmoid:
            return std::tanh(spec.gamma * x.dot(y) + spec.alpha_offset);
        case KernelFamily::combination: {
            double total = 0.0;
            for (const auto& c : spec.components) total += c.weight * kernel_value(c.spec, x, y);
            return total;
        }
    }
    return 0.0;
}

void kernel_grad_accumulate(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                            const Eigen::Ref<const VectorXd>& y, double scale, Eigen::Ref<VectorXd> out) {
    switch (spec.family) {
        case KernelFamily::linear:
            out += scale * y;
            return;
        case KernelFamily::poly: {
            const double base = spec.gamma * x.dot(y) + spec.alpha_offset;
            out += scale * spec.degree * std::pow(base, spec.degree - 1) * spec.gamma * y;
            return;
        }
        case KernelFamily::rbf: {
            const double k = std::exp(-spec.gamma * (x - y).squaredNorm());
            out += scale * (-2.0 * spec.gamma * k) * (x - y);
            return;
        }
        case KernelFamily::laplace: {
            const double k = std::exp(-spec.gamma * (x - y).lpNorm<1>());
            const double c = scale * -spec.gamma * k;
            for (Index i = 0; i < x.size(); ++i) {
                const double diff = x[i] - y[i];
                if (diff > 0) out[i] += c;
                else if (diff < 0) out[i] -= c;
            }
            return;
        }
        case KernelFamily::sigmoid: {
            const double t = std::tanh(spec.gamma * x.dot(y) + spec.alpha_offset);
            out += scale * (1.0 - t * t) * spec.gamma * y;
            return;
        }
        case KernelFamily::combination:
            for (const auto& c : spec.components) kernel_grad_accumulate(c.spec, x, y, scale * c.weight, out);
            return;
    }
}

}  // namespace detail

namespace {
void check_pair(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y) {
    if (x.size() != y.size()) throw InvalidArgument("kernel: dimension mismatch");
    if (x.size() < 1) throw InvalidArgument("kernel: empty vectors");
    if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("kernel: non-finite input");
}
}  // namespace

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& y) {
    check_pair(x, y);
    return detail::kernel_value(spec, x, y);
}

VectorXd eval_kernel_grad(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                          const Eigen::Ref<const VectorXd>& y) {
    check_pair(x, y);
    VectorXd g = VectorXd::Zero(x.size());
    detail::kernel_grad_accumulate(spec, x, y, 1.0, g);
    return g;
}

MatrixXd gram(const KernelSpec& spec, const Eigen::Ref<const MatrixXd>& X) {
    if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("gram: empty input");
    require_finite(X, "gram");
    const Index n = X.rows();
    MatrixXd K(n, n);
    for (Index i = 0; i < n; ++i) {
        const VectorXd xi = X.row(i).transpose();
        for (Index j = i; j < n; ++j) {
            const double v = detail::kernel_value(spec, xi, X.row(j).transpose());
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

MatrixXd cross_gram(const KernelSpec& spec, const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const MatrixXd>& B) {
    if (A.cols() != B.cols()) throw InvalidArgument("cross_gram: dimension mismatch");
    require_finite(A, "cross_gram");
    require_finite(B, "cross_gram");
    MatrixXd K(A.rows(), B.rows());
    // Linear-type families reduce to one matrix product of the raw inputs.
    if (spec.family == KernelFamily::linear || spec.family == KernelFamily::poly ||
        spec.family == KernelFamily::sigmoid) {
        const MatrixXd dots = A * B.transpose();
        for (Index i = 0; i < K.rows(); ++i) {
            for (Index j = 0; j < K.cols(); ++j) {
                const double d = dots(i, j);
                switch (spec.family) {
                    case KernelFamily::linear: K(i, j) = d; break;
                    case KernelFamily::poly: K(i, j) = std::pow(spec.gamma * d + spec.alpha_offset, spec.degree); break;
                    default: K(i, j) = std::tanh(spec.gamma * d + spec.alpha_offset); break;
                }
            }
        }
        return K;
    }
    for (Index i = 0; i < A.rows(); ++i) {
        const VectorXd a = A.row(i).transpose();
        for (Index j = 0; j < B.rows(); ++j) K(i, j) = detail::kernel_value(spec, a, B.row(j).transpose());
    }
    return K;
}

KernelSpec combine(std::vector<double> weights, std::vector<KernelSpec> specs) {
    if (specs.empty()) throw InvalidArgument("combine: empty kernel list");
    if (weights.size() != specs.size()) throw InvalidArgument("combine: weights and specs differ in length");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("combine: weights must be nonnegative");
        total += w;
    }
    if (total <= 0.0) throw InvalidArgument("combine: all weights are zero");
    if (specs.size() == 1) {
        specs.front().validate();
        return specs.front();
    }
    KernelSpec out;
    out.family = KernelFamily::combination;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        out.components.push_back({weights[i] / total, std::move(specs[i])});
    }
    out.validate();
    return out;
}

KernelSpec combine_uniform(std::vector<KernelSpec> specs) {
    std::vector<double> w(specs.size(), 1.0);
    return combine(std::move(w), std::move(specs));
}

}  // namespace kce
