// Coverage requirements as quantified linear-arithmetic formulas over network
// activations, their satisfaction on a finite test suite, the coverage
// metric, and generators for the NC, SSC, NBC and Lipschitz families.
//
// Grammar:
//   r ::= Q x. e | Q x1,x2. e
//   e ::= a ~ 0 | e and e | not e | #{e1..em} ~ q
//   a ::= w | c*w | p | a + a | a - a
// with sugar for sign (in)equality of two inputs at a neuron, box membership
// and norm distances between layer vectors.
#pragma once

#include "concolic/network.hpp"
#include "concolic/norms.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace concolic {

enum class InputVar : std::uint8_t { X = 0, X1 = 1, X2 = 2 };
enum class Rel { Le, Lt, Eq, Gt, Ge };
enum class Quantifier { Exists, Forall };
enum class ValueKind { Pre, Post };  // u (before ReLU) and v (after)

std::string_view var_name(InputVar x);
std::string_view rel_name(Rel rel);
bool compare(double lhs, Rel rel, double rhs);

// ---------------------------------------------------------------------------
// Arithmetic expressions

struct ArithNode;
using ArithExpr = std::shared_ptr<const ArithNode>;

/// u[x]_{k,l} or v[x]_{k,l}; layer 1 addresses input coordinates.
struct VarRef {
    ValueKind kind = ValueKind::Pre;
    InputVar input = InputVar::X;
    NeuronId neuron;
};
struct ConstTerm {
    double value = 0.0;
};
struct ScaledVar {
    double coef = 1.0;
    VarRef var;
};
struct Sum {
    ArithExpr lhs, rhs;
};
struct Difference {
    ArithExpr lhs, rhs;
};
/// coef * ||v[a]_k - v[b]_k|| under `norm`.
struct LayerDistance {
    double coef = 1.0;
    Norm norm = Norm::Linf;
    int layer = 1;
    InputVar a = InputVar::X1;
    InputVar b = InputVar::X2;
};

struct ArithNode {
    std::variant<VarRef, ConstTerm, ScaledVar, Sum, Difference, LayerDistance> node;
};

ArithExpr pre(InputVar x, NeuronId n);
ArithExpr post(InputVar x, NeuronId n);
ArithExpr constant(double p);
ArithExpr scaled(double c, VarRef var);
ArithExpr layer_distance(Norm norm, int layer, InputVar a, InputVar b, double coef = 1.0);
ArithExpr operator+(ArithExpr a, ArithExpr b);
ArithExpr operator-(ArithExpr a, ArithExpr b);

// ---------------------------------------------------------------------------
// Boolean expressions

struct BoolNode;
using BoolExpr = std::shared_ptr<const BoolNode>;

/// expr ~ 0
struct Atom {
    ArithExpr expr;
    Rel rel = Rel::Gt;
};
/// n-ary conjunction; empty is true.
struct Conj {
    std::vector<BoolExpr> items;
};
struct Negation {
    BoolExpr inner;
};
/// #{items that hold} ~ q
struct CountCmp {
    std::vector<BoolExpr> items;
    Rel rel = Rel::Ge;
    std::size_t q = 0;
};
struct SignEq {
    InputVar a = InputVar::X1;
    InputVar b = InputVar::X2;
    NeuronId neuron;
};
struct SignNeq {
    InputVar a = InputVar::X1;
    InputVar b = InputVar::X2;
    NeuronId neuron;
};
struct InBox {
    InputVar x = InputVar::X;
    Vector lower, upper;
};

struct BoolNode {
    std::variant<Atom, Conj, Negation, CountCmp, SignEq, SignNeq, InBox> node;
};

BoolExpr atom(ArithExpr a, Rel rel);
BoolExpr conj(std::vector<BoolExpr> items);
BoolExpr operator&&(BoolExpr a, BoolExpr b);
BoolExpr negate(BoolExpr e);
BoolExpr count_cmp(std::vector<BoolExpr> items, Rel rel, std::size_t q);
BoolExpr sign_eq(InputVar a, InputVar b, NeuronId n);
BoolExpr sign_neq(InputVar a, InputVar b, NeuronId n);
BoolExpr in_box(InputVar x, Vector lower, Vector upper);
BoolExpr truth();

/// Concrete inputs bound to the quantified variables, by their activations.
struct Binding {
    std::array<const Activations*, 3> vars{nullptr, nullptr, nullptr};

    Binding& bind(InputVar x, const Activations& acts)
    {
        vars[static_cast<std::size_t>(x)] = &acts;
        return *this;
    }
    const Activations& at(InputVar x) const;
};

/// Throws EvaluationError for unbound variables or out-of-range indices.
double eval_arith(const ArithExpr& a, const Binding& binding);
bool eval_bool(const BoolExpr& e, const Binding& binding);
/// Convenience form: runs the network on each bound input first.
bool eval_bool(const BoolExpr& e, const std::map<InputVar, Vector>& inputs, const Network& net);

/// Free input variables of a formula, as a bitmask over InputVar.
unsigned free_vars(const BoolExpr& e);

// ---------------------------------------------------------------------------
// Requirements

enum class Family { NC, SSC, NBCHigh, NBCLow, LIP, Custom };
enum class Status { Open, Satisfied, Failed };

std::string_view family_name(Family f);
std::string_view status_name(Status s);

struct RequirementTag {
    Family family = Family::Custom;
    NeuronId neuron;      // NC and NBC target; SSC condition neuron
    NeuronId decision;    // SSC decision neuron
    std::size_t box = 0;  // LIP subspace index

    std::string str() const;
    auto operator<=>(const RequirementTag&) const = default;
};

/// Which layer the Lipschitz requirements compare: the output logits, or the
/// input layer as literally written in the requirement definition.
enum class LipschitzLayer { Logits, Input };

/// An L-infinity box of radius `radius` around `center`, clipped to [0, 1].
struct Box {
    Vector center;
    double radius = 0.0;

    Vector lower() const;
    Vector upper() const;
    bool contains(std::span<const double> x) const;
};

struct SubspacePartition {
    std::vector<Box> boxes;
};

/// One box of radius `radius` around each seed.
SubspacePartition partition_around(const std::vector<Vector>& seeds, double radius);

struct LipschitzParams {
    Box box;
    double c = 1.0;
    Norm norm = Norm::Linf;
    int out_layer = 0;  // layer whose values are compared
};

struct Requirement {
    Quantifier quantifier = Quantifier::Exists;
    int arity = 1;
    BoolExpr body;
    RequirementTag tag;
    Status status = Status::Open;
    /// NBC: the high bound (NBCHigh) or low bound (NBCLow).
    double bound = 0.0;
    std::optional<LipschitzParams> lipschitz;
};

/// Finite-suite satisfaction. Pairs range over all ordered pairs of tests,
/// a test paired with itself included.
bool satisfies(std::span<const Activations> suite, const Requirement& r);
bool satisfies(const Network& net, std::span<const Vector> suite, const Requirement& r);

/// For existential requirements: whether some witness tuple involving test
/// `newest` satisfies r. Used to update satisfaction incrementally.
bool satisfied_with(std::span<const Activations> suite, const Requirement& r, std::size_t newest);

/// Fraction of requirements satisfied; throws EvaluationError when empty.
double coverage(std::span<const Activations> suite, std::span<const Requirement> reqs);
double coverage(const Network& net, std::span<const Vector> suite, std::span<const Requirement> reqs);

// ---------------------------------------------------------------------------
// Generators

std::vector<Requirement> gen_nc(const Network& net);

/// Pairs of (condition at layer k, decision at layer k+1). An empty subset
/// selects every eligible pair.
std::vector<Requirement> gen_ssc(const Network& net, const std::vector<std::pair<NeuronId, NeuronId>>& subset = {});

/// Per-ReLU-neuron activation bounds, indexed [layer][neuron].
struct NeuronBounds {
    std::vector<Vector> high;
    std::vector<Vector> low;

    double hi(NeuronId n) const { return high[n.layer][n.index]; }
    double lo(NeuronId n) const { return low[n.layer][n.index]; }
};

/// Per-neuron min/max of u over the samples, widened by `widen` times the
/// observed range on each side.
NeuronBounds bounds_from_samples(const Network& net, std::span<const Vector> samples, double widen = 0.05);

std::vector<Requirement> gen_nbc(const Network& net, const NeuronBounds& bounds);

std::vector<Requirement> gen_lipschitz(const Network& net, const SubspacePartition& partition, double c, Norm norm = Norm::Linf,
                                       LipschitzLayer layer = LipschitzLayer::Logits);

// ---------------------------------------------------------------------------
// Serialization

std::string to_sexpr(const ArithExpr& a);
std::string to_sexpr(const BoolExpr& e);
ArithExpr parse_arith_sexpr(const std::string& text);
BoolExpr parse_bool_sexpr(const std::string& text);

/// JSON array of {"tag", "family", "quantifier", "arity", "status", "body"}.
std::string requirements_to_json(std::span<const Requirement> reqs);
/// Restores quantifier, arity, status, tag and body. NBC bounds are read back
/// from the body; Lipschitz box parameters are not restored.
std::vector<Requirement> requirements_from_json(const std::string& text);

}  // namespace concolic
