#include "doctest.h"

#include "tgmem/checkpoint.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <unistd.h>
#include <sstream>
#include <string>
#include <vector>

using namespace tgmem;

namespace {

std::string temp_path(const char* stem) {
    auto dir = std::filesystem::temp_directory_path();
    return (dir / (std::string(stem) + "-" + std::to_string(::getpid()) + ".ckpt")).string();
}

struct PathGuard {
    std::string path;
    ~PathGuard() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("tensor stream round trip is bit exact") {
    Rng rng(3);
    std::vector<NamedTensor> tensors;
    Tensor a(3, 4);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal() * 1e-3;
    Tensor b(1, 1, {-0.0});
    Tensor c(2, 2, {1.0 / 3.0, 1e300, 5e-324, -7.25});
    tensors.push_back({"layer/weight", a});
    tensors.push_back({"bias", b});
    tensors.push_back({"extremes", c});

    std::stringstream buf;
    write_tensors(buf, tensors);
    std::vector<NamedTensor> back = read_tensors(buf);

    REQUIRE(back.size() == tensors.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].name == tensors[k].name);
        REQUIRE(back[k].tensor.rows() == tensors[k].tensor.rows());
        REQUIRE(back[k].tensor.cols() == tensors[k].tensor.cols());
        for (std::size_t i = 0; i < back[k].tensor.size(); ++i) {
            CHECK(std::memcmp(&back[k].tensor[i], &tensors[k].tensor[i],
                              sizeof(double)) == 0);
        }
    }
}

TEST_CASE("file round trip preserves parameter values") {
    PathGuard guard{temp_path("params")};
    Parameter w("w", Tensor(2, 2, {0.1, 0.2, 0.3, 0.4}));
    Parameter u("u", Tensor(1, 3, {-1.0, 0.0, 1.0}));
    std::vector<Parameter*> params{&w, &u};
    save_checkpoint(guard.path, params);

    Parameter w2("w", Tensor(2, 2));
    Parameter u2("u", Tensor(1, 3));
    std::vector<Parameter*> loaded{&w2, &u2};
    load_checkpoint(guard.path, loaded);
    for (std::size_t i = 0; i < 4; ++i) CHECK(w2.value[i] == w.value[i]);
    for (std::size_t i = 0; i < 3; ++i) CHECK(u2.value[i] == u.value[i]);
}

TEST_CASE("loading rejects mismatched parameter sets") {
    PathGuard guard{temp_path("mismatch")};
    Parameter w("w", Tensor(2, 2, {0.1, 0.2, 0.3, 0.4}));
    std::vector<Parameter*> params{&w};
    save_checkpoint(guard.path, params);

    Parameter other("v", Tensor(2, 2));
    std::vector<Parameter*> wrong_name{&other};
    CHECK_THROWS_AS(load_checkpoint(guard.path, wrong_name), IoError);

    Parameter bad_shape("w", Tensor(1, 4));
    std::vector<Parameter*> wrong_shape{&bad_shape};
    CHECK_THROWS_AS(load_checkpoint(guard.path, wrong_shape), IoError);

    Parameter extra("x", Tensor(1, 1));
    Parameter w3("w", Tensor(2, 2));
    std::vector<Parameter*> superset{&w3, &extra};
    CHECK_THROWS_AS(load_checkpoint(guard.path, superset), IoError);
}

TEST_CASE("reading malformed content fails cleanly") {
    std::stringstream truncated("w,2,2\n\x01\x02");
    CHECK_THROWS_AS(read_tensors(truncated), IoError);

    std::stringstream bad_header("w;2;2\n");
    CHECK_THROWS_AS(read_tensors(bad_header), IoError);

    CHECK_THROWS_AS(load_tensors("/nonexistent/dir/file.ckpt"), IoError);
}

TEST_CASE("names may not contain delimiters") {
    std::vector<NamedTensor> bad;
    bad.push_back({"a,b", Tensor::scalar(1.0)});
    std::stringstream buf;
    CHECK_THROWS_AS(write_tensors(buf, bad), ArgumentError);
}
