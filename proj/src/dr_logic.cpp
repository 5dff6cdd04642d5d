#include "concolic/dr_logic.hpp"

#include "concolic/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace concolic {

std::string_view var_name(InputVar x)
{
    switch (x) {
    case InputVar::X:
        return "x";
    case InputVar::X1:
        return "x1";
    case InputVar::X2:
        return "x2";
    }
    return "?";
}

std::string_view rel_name(Rel rel)
{
    switch (rel) {
    case Rel::Le:
        return "<=";
    case Rel::Lt:
        return "<";
    case Rel::Eq:
        return "=";
    case Rel::Gt:
        return ">";
    case Rel::Ge:
        return ">=";
    }
    return "?";
}

bool compare(double lhs, Rel rel, double rhs)
{
    switch (rel) {
    case Rel::Le:
        return lhs <= rhs;
    case Rel::Lt:
        return lhs < rhs;
    case Rel::Eq:
        return lhs == rhs;
    case Rel::Gt:
        return lhs > rhs;
    case Rel::Ge:
        return lhs >= rhs;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Builders

ArithExpr pre(InputVar x, NeuronId n)
{
    return std::make_shared<const ArithNode>(ArithNode{VarRef{ValueKind::Pre, x, n}});
}

ArithExpr post(InputVar x, NeuronId n)
{
    return std::make_shared<const ArithNode>(ArithNode{VarRef{ValueKind::Post, x, n}});
}

ArithExpr constant(double p)
{
    return std::make_shared<const ArithNode>(ArithNode{ConstTerm{p}});
}

ArithExpr scaled(double c, VarRef var)
{
    return std::make_shared<const ArithNode>(ArithNode{ScaledVar{c, var}});
}

ArithExpr layer_distance(Norm norm, int layer, InputVar a, InputVar b, double coef)
{
    return std::make_shared<const ArithNode>(ArithNode{LayerDistance{coef, norm, layer, a, b}});
}

ArithExpr operator+(ArithExpr a, ArithExpr b)
{
    return std::make_shared<const ArithNode>(ArithNode{Sum{std::move(a), std::move(b)}});
}

ArithExpr operator-(ArithExpr a, ArithExpr b)
{
    return std::make_shared<const ArithNode>(ArithNode{Difference{std::move(a), std::move(b)}});
}

BoolExpr atom(ArithExpr a, Rel rel)
{
    return std::make_shared<const BoolNode>(BoolNode{Atom{std::move(a), rel}});
}

BoolExpr conj(std::vector<BoolExpr> items)
{
    return std::make_shared<const BoolNode>(BoolNode{Conj{std::move(items)}});
}

BoolExpr operator&&(BoolExpr a, BoolExpr b)
{
    return conj({std::move(a), std::move(b)});
}

BoolExpr negate(BoolExpr e)
{
    return std::make_shared<const BoolNode>(BoolNode{Negation{std::move(e)}});
}

BoolExpr count_cmp(std::vector<BoolExpr> items, Rel rel, std::size_t q)
{
    return std::make_shared<const BoolNode>(BoolNode{CountCmp{std::move(items), rel, q}});
}

BoolExpr sign_eq(InputVar a, InputVar b, NeuronId n)
{
    return std::make_shared<const BoolNode>(BoolNode{SignEq{a, b, n}});
}

BoolExpr sign_neq(InputVar a, InputVar b, NeuronId n)
{
    return std::make_shared<const BoolNode>(BoolNode{SignNeq{a, b, n}});
}

BoolExpr in_box(InputVar x, Vector lower, Vector upper)
{
    if (lower.size() != upper.size()) {
        throw GenerationError("box bounds differ in length");
    }
    return std::make_shared<const BoolNode>(BoolNode{InBox{x, std::move(lower), std::move(upper)}});
}

BoolExpr truth()
{
    return conj({});
}

// ---------------------------------------------------------------------------
// Evaluation

const Activations& Binding::at(InputVar x) const
{
    const Activations* a = vars[static_cast<std::size_t>(x)];
    if (a == nullptr) {
        throw EvaluationError("input variable " + std::string(var_name(x)) + " is unbound");
    }
    return *a;
}

namespace {

double read_var(const VarRef& var, const Binding& binding)
{
    const Activations& acts = binding.at(var.input);
    const NeuronId n = var.neuron;
    if (n.layer < 1 || n.layer > acts.layer_count() || n.index < 0 ||
        static_cast<std::size_t>(n.index) >= acts.u[n.layer].size()) {
        throw EvaluationError("variable " + to_string(n) + " is outside the network");
    }
    return var.kind == ValueKind::Pre ? acts.pre(n) : acts.post(n);
}

std::span<const double> layer_values(const Activations& acts, int layer)
{
    if (layer < 1 || layer > acts.layer_count()) {
        throw EvaluationError("layer " + std::to_string(layer) + " is outside the network");
    }
    return acts.v[layer];
}

bool sign_bit(const Activations& acts, NeuronId n)
{
    if (n.layer < 2 || n.layer > acts.layer_count() || n.index < 0 ||
        static_cast<std::size_t>(n.index) >= acts.u[n.layer].size()) {
        throw EvaluationError("sign of " + to_string(n) + " is outside the network");
    }
    return acts.pre(n) >= 0.0;
}

struct ArithEval {
    const Binding& binding;

    double operator()(const VarRef& v) const { return read_var(v, binding); }
    double operator()(const ConstTerm& c) const { return c.value; }
    double operator()(const ScaledVar& s) const { return s.coef * read_var(s.var, binding); }
    double operator()(const Sum& s) const { return eval_arith(s.lhs, binding) + eval_arith(s.rhs, binding); }
    double operator()(const Difference& d) const { return eval_arith(d.lhs, binding) - eval_arith(d.rhs, binding); }
    double operator()(const LayerDistance& d) const
    {
        return d.coef * distance(layer_values(binding.at(d.a), d.layer), layer_values(binding.at(d.b), d.layer), d.norm);
    }
};

struct BoolEval {
    const Binding& binding;

    bool operator()(const Atom& a) const { return compare(eval_arith(a.expr, binding), a.rel, 0.0); }
    bool operator()(const Conj& c) const
    {
        for (const BoolExpr& item : c.items) {
            if (!eval_bool(item, binding)) {
                return false;
            }
        }
        return true;
    }
    bool operator()(const Negation& n) const { return !eval_bool(n.inner, binding); }
    bool operator()(const CountCmp& c) const
    {
        std::size_t count = 0;
        for (const BoolExpr& item : c.items) {
            count += eval_bool(item, binding) ? 1 : 0;
        }
        return compare(static_cast<double>(count), c.rel, static_cast<double>(c.q));
    }
    bool operator()(const SignEq& s) const { return sign_bit(binding.at(s.a), s.neuron) == sign_bit(binding.at(s.b), s.neuron); }
    bool operator()(const SignNeq& s) const { return sign_bit(binding.at(s.a), s.neuron) != sign_bit(binding.at(s.b), s.neuron); }
    bool operator()(const InBox& b) const
    {
        const std::span<const double> x = binding.at(b.x).input();
        if (x.size() != b.lower.size()) {
            throw EvaluationError("box dimension " + std::to_string(b.lower.size()) + " differs from input dimension " +
                                  std::to_string(x.size()));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < b.lower[i] || x[i] > b.upper[i]) {
                return false;
            }
        }
        return true;
    }
};

unsigned var_bit(InputVar x)
{
    return 1u << static_cast<unsigned>(x);
}

unsigned arith_vars(const ArithExpr& a)
{
    return std::visit(
        [](const auto& n) -> unsigned {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VarRef>) {
                return var_bit(n.input);
            } else if constexpr (std::is_same_v<T, ScaledVar>) {
                return var_bit(n.var.input);
            } else if constexpr (std::is_same_v<T, Sum> || std::is_same_v<T, Difference>) {
                return arith_vars(n.lhs) | arith_vars(n.rhs);
            } else if constexpr (std::is_same_v<T, LayerDistance>) {
                return var_bit(n.a) | var_bit(n.b);
            } else {
                return 0u;
            }
        },
        a->node);
}

}  // namespace

double eval_arith(const ArithExpr& a, const Binding& binding)
{
    return std::visit(ArithEval{binding}, a->node);
}

bool eval_bool(const BoolExpr& e, const Binding& binding)
{
    return std::visit(BoolEval{binding}, e->node);
}

bool eval_bool(const BoolExpr& e, const std::map<InputVar, Vector>& inputs, const Network& net)
{
    std::vector<Activations> acts;
    acts.reserve(inputs.size());
    Binding binding;
    for (const auto& [var, input] : inputs) {
        acts.push_back(forward(net, input));
        binding.bind(var, acts.back());
    }
    return eval_bool(e, binding);
}

unsigned free_vars(const BoolExpr& e)
{
    return std::visit(
        [](const auto& n) -> unsigned {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Atom>) {
                return arith_vars(n.expr);
            } else if constexpr (std::is_same_v<T, Conj> || std::is_same_v<T, CountCmp>) {
                unsigned mask = 0;
                for (const BoolExpr& item : n.items) {
                    mask |= free_vars(item);
                }
                return mask;
            } else if constexpr (std::is_same_v<T, Negation>) {
                return free_vars(n.inner);
            } else if constexpr (std::is_same_v<T, InBox>) {
                return var_bit(n.x);
            } else {
                return var_bit(n.a) | var_bit(n.b);
            }
        },
        e->node);
}

// ---------------------------------------------------------------------------
// Requirements and satisfaction

std::string_view family_name(Family f)
{
    switch (f) {
    case Family::NC:
        return "NC";
    case Family::SSC:
        return "SSC";
    case Family::NBCHigh:
        return "NBC-hi";
    case Family::NBCLow:
        return "NBC-lo";
    case Family::LIP:
        return "LIP";
    case Family::Custom:
        return "custom";
    }
    return "?";
}

std::string_view status_name(Status s)
{
    switch (s) {
    case Status::Open:
        return "open";
    case Status::Satisfied:
        return "satisfied";
    case Status::Failed:
        return "failed";
    }
    return "?";
}

std::string RequirementTag::str() const
{
    const std::string name(family_name(family));
    const auto idx = [](NeuronId n) { return std::to_string(n.layer) + "," + std::to_string(n.index); };
    switch (family) {
    case Family::NC:
    case Family::NBCHigh:
    case Family::NBCLow:
        return name + "(" + idx(neuron) + ")";
    case Family::SSC:
        return name + "(" + idx(neuron) + ";" + idx(decision) + ")";
    case Family::LIP:
        return name + "(" + std::to_string(box) + ")";
    case Family::Custom:
        break;
    }
    return name;
}

Vector Box::lower() const
{
    Vector out(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        out[i] = std::max(0.0, center[i] - radius);
    }
    return out;
}

Vector Box::upper() const
{
    Vector out(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        out[i] = std::min(1.0, center[i] + radius);
    }
    return out;
}

bool Box::contains(std::span<const double> x) const
{
    if (x.size() != center.size()) {
        return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < std::max(0.0, center[i] - radius) || x[i] > std::min(1.0, center[i] + radius)) {
            return false;
        }
    }
    return true;
}

SubspacePartition partition_around(const std::vector<Vector>& seeds, double radius)
{
    if (!(radius > 0.0)) {
        throw GenerationError("box radius must be positive");
    }
    SubspacePartition p;
    for (const Vector& s : seeds) {
        p.boxes.push_back(Box{s, radius});
    }
    return p;
}

namespace {

bool holds_single(const Requirement& r, const Activations& t)
{
    Binding b;
    b.bind(InputVar::X, t);
    return eval_bool(r.body, b);
}

bool holds_pair(const Requirement& r, const Activations& t1, const Activations& t2)
{
    Binding b;
    b.bind(InputVar::X1, t1).bind(InputVar::X2, t2);
    return eval_bool(r.body, b);
}

}  // namespace

bool satisfies(std::span<const Activations> suite, const Requirement& r)
{
    const bool exists = r.quantifier == Quantifier::Exists;
    if (r.arity == 1) {
        for (const Activations& t : suite) {
            if (holds_single(r, t) == exists) {
                return exists;
            }
        }
        return !exists;
    }
    for (const Activations& t1 : suite) {
        for (const Activations& t2 : suite) {
            if (holds_pair(r, t1, t2) == exists) {
                return exists;
            }
        }
    }
    return !exists;
}

bool satisfies(const Network& net, std::span<const Vector> suite, const Requirement& r)
{
    std::vector<Activations> acts;
    acts.reserve(suite.size());
    for (const Vector& t : suite) {
        acts.push_back(forward(net, t));
    }
    return satisfies(acts, r);
}

bool satisfied_with(std::span<const Activations> suite, const Requirement& r, std::size_t newest)
{
    if (r.quantifier != Quantifier::Exists) {
        throw EvaluationError("incremental satisfaction is defined for existential requirements only");
    }
    const Activations& t = suite[newest];
    if (r.arity == 1) {
        return holds_single(r, t);
    }
    for (const Activations& other : suite) {
        if (holds_pair(r, t, other) || holds_pair(r, other, t)) {
            return true;
        }
    }
    return false;
}

double coverage(std::span<const Activations> suite, std::span<const Requirement> reqs)
{
    if (reqs.empty()) {
        throw EvaluationError("coverage of an empty requirement set is undefined");
    }
    std::size_t sat = 0;
    for (const Requirement& r : reqs) {
        sat += satisfies(suite, r) ? 1 : 0;
    }
    return static_cast<double>(sat) / static_cast<double>(reqs.size());
}

double coverage(const Network& net, std::span<const Vector> suite, std::span<const Requirement> reqs)
{
    std::vector<Activations> acts;
    acts.reserve(suite.size());
    for (const Vector& t : suite) {
        acts.push_back(forward(net, t));
    }
    return coverage(acts, reqs);
}

// ---------------------------------------------------------------------------
// Generators

std::vector<Requirement> gen_nc(const Network& net)
{
    std::vector<Requirement> out;
    for (NeuronId n : net.relu_neurons()) {
        Requirement r;
        r.quantifier = Quantifier::Exists;
        r.arity = 1;
        r.body = atom(pre(InputVar::X, n), Rel::Ge);
        r.tag = RequirementTag{Family::NC, n, {}, 0};
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Requirement> gen_ssc(const Network& net, const std::vector<std::pair<NeuronId, NeuronId>>& subset)
{
    const int K = net.layer_count();
    const auto eligible = [&](NeuronId cond, NeuronId dec) {
        if (dec.layer != cond.layer + 1 || cond.layer < 2 || dec.layer > K - 1) {
            throw GenerationError("SSC pair " + to_string(cond) + "/" + to_string(dec) + " does not span adjacent hidden layers");
        }
        if (!net.is_relu(cond.layer) || !net.is_relu(dec.layer)) {
            throw GenerationError("SSC pair " + to_string(cond) + "/" + to_string(dec) + " involves a non-ReLU layer");
        }
        if (cond.index < 0 || static_cast<std::size_t>(cond.index) >= net.size(cond.layer) || dec.index < 0 ||
            static_cast<std::size_t>(dec.index) >= net.size(dec.layer)) {
            throw GenerationError("SSC pair " + to_string(cond) + "/" + to_string(dec) + " has an index out of range");
        }
    };

    std::vector<std::pair<NeuronId, NeuronId>> pairs = subset;
    if (pairs.empty()) {
        for (int k = 2; k + 1 <= K - 1; ++k) {
            if (!net.is_relu(k) || !net.is_relu(k + 1)) {
                continue;
            }
            for (std::size_t i = 0; i < net.size(k); ++i) {
                for (std::size_t j = 0; j < net.size(k + 1); ++j) {
                    pairs.push_back({{k, static_cast<int>(i)}, {k + 1, static_cast<int>(j)}});
                }
            }
        }
    }

    std::vector<Requirement> out;
    for (const auto& [cond, dec] : pairs) {
        eligible(cond, dec);
        std::vector<BoolExpr> items;
        items.push_back(sign_neq(InputVar::X1, InputVar::X2, cond));
        items.push_back(sign_neq(InputVar::X1, InputVar::X2, dec));
        for (std::size_t l = 0; l < net.size(cond.layer); ++l) {
            if (static_cast<int>(l) != cond.index) {
                items.push_back(sign_eq(InputVar::X1, InputVar::X2, {cond.layer, static_cast<int>(l)}));
            }
        }
        Requirement r;
        r.quantifier = Quantifier::Exists;
        r.arity = 2;
        r.body = conj(std::move(items));
        r.tag = RequirementTag{Family::SSC, cond, dec, 0};
        out.push_back(std::move(r));
    }
    return out;
}

NeuronBounds bounds_from_samples(const Network& net, std::span<const Vector> samples, double widen)
{
    if (samples.empty()) {
        throw GenerationError("NBC bounds need at least one sample");
    }
    NeuronBounds b;
    const auto K = static_cast<std::size_t>(net.layer_count());
    b.high.resize(K + 1);
    b.low.resize(K + 1);
    for (int k : net.relu_layers()) {
        b.high[k].assign(net.size(k), -std::numeric_limits<double>::infinity());
        b.low[k].assign(net.size(k), std::numeric_limits<double>::infinity());
    }
    for (const Vector& s : samples) {
        const Activations acts = forward(net, s);
        for (int k : net.relu_layers()) {
            for (std::size_t l = 0; l < net.size(k); ++l) {
                b.high[k][l] = std::max(b.high[k][l], acts.u[k][l]);
                b.low[k][l] = std::min(b.low[k][l], acts.u[k][l]);
            }
        }
    }
    for (int k : net.relu_layers()) {
        for (std::size_t l = 0; l < net.size(k); ++l) {
            const double range = b.high[k][l] - b.low[k][l];
            b.high[k][l] += widen * range;
            b.low[k][l] -= widen * range;
        }
    }
    return b;
}

std::vector<Requirement> gen_nbc(const Network& net, const NeuronBounds& bounds)
{
    std::vector<Requirement> out;
    for (NeuronId n : net.relu_neurons()) {
        if (static_cast<std::size_t>(n.layer) >= bounds.high.size() || static_cast<std::size_t>(n.index) >= bounds.high[n.layer].size() ||
            static_cast<std::size_t>(n.layer) >= bounds.low.size() || static_cast<std::size_t>(n.index) >= bounds.low[n.layer].size()) {
            throw GenerationError("no NBC bounds for " + to_string(n));
        }
        const double h = bounds.hi(n);
        const double l = bounds.lo(n);
        if (!std::isfinite(h) || !std::isfinite(l)) {
            throw GenerationError("NBC bounds for " + to_string(n) + " must be finite");
        }
        if (h < l) {
            throw GenerationError("NBC bounds for " + to_string(n) + " are inverted (high " + std::to_string(h) + " < low " +
                                  std::to_string(l) + ")");
        }
        Requirement hi;
        hi.quantifier = Quantifier::Exists;
        hi.arity = 1;
        hi.body = atom(pre(InputVar::X, n) - constant(h), Rel::Gt);
        hi.tag = RequirementTag{Family::NBCHigh, n, {}, 0};
        hi.bound = h;
        out.push_back(hi);

        Requirement lo;
        lo.quantifier = Quantifier::Exists;
        lo.arity = 1;
        lo.body = atom(pre(InputVar::X, n) - constant(l), Rel::Lt);
        lo.tag = RequirementTag{Family::NBCLow, n, {}, 0};
        lo.bound = l;
        out.push_back(lo);
    }
    return out;
}

std::vector<Requirement> gen_lipschitz(const Network& net, const SubspacePartition& partition, double c, Norm norm,
                                       LipschitzLayer layer)
{
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw GenerationError("Lipschitz constant must be positive and finite");
    }
    const int out_layer = layer == LipschitzLayer::Logits ? net.layer_count() : 1;
    std::vector<Requirement> out;
    for (std::size_t i = 0; i < partition.boxes.size(); ++i) {
        const Box& box = partition.boxes[i];
        if (box.center.size() != net.input_size()) {
            throw GenerationError("box " + std::to_string(i) + " has dimension " + std::to_string(box.center.size()) +
                                  ", network input has " + std::to_string(net.input_size()));
        }
        const ArithExpr gap = layer_distance(norm, out_layer, InputVar::X1, InputVar::X2) -
                              layer_distance(norm, 1, InputVar::X1, InputVar::X2, c);
        Requirement r;
        r.quantifier = Quantifier::Exists;
        r.arity = 2;
        r.body = conj({atom(gap, Rel::Gt), in_box(InputVar::X1, box.lower(), box.upper()), in_box(InputVar::X2, box.lower(), box.upper())});
        r.tag = RequirementTag{Family::LIP, {}, {}, i};
        r.lipschitz = LipschitzParams{box, c, norm, out_layer};
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace concolic
