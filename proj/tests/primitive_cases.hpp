#pragma once

#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace kite::test {

struct PrimitiveCase {
  std::string name;
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

// One finite-difference case per differentiable primitive, each drawn from
// the given seed.
inline std::vector<PrimitiveCase> primitive_cases() {
  using namespace kite::ad;
  std::vector<PrimitiveCase> c;
  c.push_back({"add_broadcast", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({3, 4}, rng), b = random_tensor({4}, rng);
                 return grad_check([&] { return weighted_sum(add(a, b), s); }, {a, b});
               }});
  c.push_back({"mul", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
                 return grad_check([&] { return weighted_sum(mul(a, b), s); }, {a, b});
               }});
  c.push_back({"scale_mean", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({5}, rng);
                 return grad_check([&] { return mean(mul(scale(a, 2.5), a)); }, {a});
               }});
  c.push_back({"matmul", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
                 return grad_check([&] { return weighted_sum(matmul(a, b), s); }, {a, b});
               }});
  c.push_back({"transpose_3d", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({2, 3, 4}, rng);
                 return grad_check([&] { return weighted_sum(transpose(a, 0, 2), s); }, {a});
               }});
  c.push_back({"reshape", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({2, 6}, rng);
                 return grad_check([&] { return weighted_sum(reshape(a, {3, 4}), s); }, {a});
               }});
  c.push_back({"concat", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 2}, rng);
                 return grad_check(
                     [&] {
                       std::vector<T> parts{a, b, a};
                       return weighted_sum(concat<double>(parts, 1), s);
                     },
                     {a, b});
               }});
  c.push_back({"slice", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({3, 5}, rng);
                 return grad_check([&] { return weighted_sum(slice(a, 1, 1, 3), s); }, {a});
               }});
  c.push_back({"embedding_lookup", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto table = random_tensor({5, 3}, rng);
                 const std::vector<std::int32_t> ids{4, 0, 4, 2};
                 return grad_check([&] { return weighted_sum(embedding_lookup(table, std::span(ids)), s); }, {table});
               }});
  c.push_back({"layer_norm", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({3, 6}, rng), g = random_tensor({6}, rng), b = random_tensor({6}, rng);
                 return grad_check([&] { return weighted_sum(layer_norm(x, g, b), s); }, {x, g, b});
               }});
  c.push_back({"batch_norm_train", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({4, 3, 5}, rng), g = random_tensor({3}, rng), b = random_tensor({3}, rng);
                 auto rm = T::zeros({3}), rv = T::full({3}, 1.0);
                 return grad_check([&] { return weighted_sum(batch_norm(x, g, b, rm, rv, true), s); }, {x, g, b});
               }});
  c.push_back({"batch_norm_eval", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({4, 3}, rng), g = random_tensor({3}, rng), b = random_tensor({3}, rng);
                 auto rm = random_tensor({3}, rng, -0.5, 0.5, false), rv = random_tensor({3}, rng, 0.5, 2.0, false);
                 return grad_check([&] { return weighted_sum(batch_norm(x, g, b, rm, rv, false), s); }, {x, g, b});
               }});
  c.push_back({"relu", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_away_from_zero({4, 4}, rng);
                 return grad_check([&] { return weighted_sum(relu(x), s); }, {x});
               }});
  c.push_back({"leaky_relu", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_away_from_zero({4, 4}, rng);
                 return grad_check([&] { return weighted_sum(leaky_relu(x), s); }, {x});
               }});
  c.push_back({"conv1d_stride1", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({2, 3, 7}, rng), w = random_tensor({4, 3, 3}, rng), b = random_tensor({4}, rng);
                 return grad_check([&] { return weighted_sum(conv1d(x, w, b, 1), s); }, {x, w, b});
               }});
  c.push_back({"conv1d_stride2", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({2, 2, 7}, rng), w = random_tensor({3, 2, 3}, rng), b = random_tensor({3}, rng);
                 return grad_check([&] { return weighted_sum(conv1d(x, w, b, 2), s); }, {x, w, b});
               }});
  c.push_back({"max_pool1d", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({2, 3, 7}, rng);
                 return grad_check([&] { return weighted_sum(max_pool1d(x), s); }, {x});
               }});
  c.push_back({"softmax", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({3, 4}, rng, -3, 3);
                 return grad_check([&] { return weighted_sum(softmax(x, 1), s); }, {x});
               }});
  c.push_back({"softmax_axis0", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({3, 4}, rng, -3, 3);
                 return grad_check([&] { return weighted_sum(softmax(x, 0), s); }, {x});
               }});
  c.push_back({"masked_softmax", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({3, 5}, rng, -3, 3);
                 const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0};
                 return grad_check([&] { return weighted_sum(masked_softmax(x, std::span(mask)), s); }, {x});
               }});
  c.push_back({"masked_softmax_grouped", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({4, 2, 3}, rng, -3, 3);
                 const std::vector<std::uint8_t> mask{1, 1, 0, 0, 1, 1};
                 return grad_check([&] { return weighted_sum(masked_softmax(x, std::span(mask)), s); }, {x});
               }});
  c.push_back({"bmm", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({2, 3, 4}, rng);
                 auto b = random_tensor({2, 4, 2}, rng);
                 return grad_check([&] { return weighted_sum(bmm(a, b), s); }, {a, b});
               }});
  c.push_back({"bmm_transposed", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto a = random_tensor({3, 2, 4}, rng);
                 auto b = random_tensor({3, 5, 4}, rng);
                 return grad_check([&] { return weighted_sum(bmm(a, b, true), s); }, {a, b});
               }});
  c.push_back({"cross_entropy", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({4, 5}, rng, -3, 3);
                 const std::vector<std::int32_t> t{0, 4, 2, 2};
                 return grad_check([&] { return cross_entropy_loss(x, std::span(t)); }, {x});
               }});
  c.push_back({"dropout", [](std::uint64_t s) {
                 std::mt19937_64 rng(s);
                 auto x = random_tensor({4, 6}, rng);
                 return grad_check(
                     [&] {
                       std::mt19937_64 mask_rng(s + 1);
                       return weighted_sum(dropout(x, 0.3, mask_rng), s);
                     },
                     {x});
               }});
  return c;
}

}  // namespace kite::test
