#include <gtest/gtest.h>

#include <filesystem>

#include "helpers.hpp"
#include "quadricflow/io.hpp"

using namespace qflow;

TEST(ParamsJson, ParsesMinimalDocument) {
    const Params p = io::parse_params(R"({"d":2,"e":1,"l":1,"activation":{"kind":"relu"},"w1":[[1,-1]],"w2":[[2]]})");
    EXPECT_EQ(p.w1, Matrix::from_rows({{1, -1}}));
    EXPECT_EQ(p.w2, Matrix::from_rows({{2}}));
    EXPECT_FALSE(p.with_bias());
}

TEST(ParamsJson, ParsesLeakyAndBiases) {
    const Params p = io::parse_params(R"({"d":1,"e":1,"l":2,"activation":{"kind":"leaky_relu","gamma":0.25},
        "w1":[[1],[2]],"w2":[[3,4]],"b1":[0.5,-0.5],"b2":[1]})");
    EXPECT_EQ(p.activation, Activation::leaky_relu(0.25));
    EXPECT_EQ(*p.b1, (Vector{0.5, -0.5}));
    EXPECT_EQ(*p.b2, Vector{1});
}

TEST(ParamsJson, RejectsMalformed) {
    const char* bad[] = {
        "{not json",
        R"({"d":2,"e":1,"l":1,"activation":{"kind":"relu"},"w1":[[1]],"w2":[[2]]})",
        R"({"d":1,"e":1,"l":1,"activation":{"kind":"tanh"},"w1":[[1]],"w2":[[2]]})",
        R"({"d":1,"e":1,"l":1,"activation":{"kind":"relu"},"w1":[["x"]],"w2":[[2]]})",
        R"({"d":1,"e":1,"l":1,"activation":{"kind":"relu"},"w1":[[1]],"w2":[[2]],"b1":[0]})",
        R"({"d":0,"e":1,"l":1,"activation":{"kind":"relu"},"w1":[[]],"w2":[[2]]})",
        R"({"d":1,"e":1,"l":1,"activation":{"kind":"relu"},"w1":[[1e999]],"w2":[[2]]})",
        R"({"d":-1,"e":1,"l":1,"activation":{"kind":"relu"},"w1":[[1]],"w2":[[2]]})",
        R"({"e":1,"l":1,"activation":{"kind":"relu"},"w1":[[1]],"w2":[[2]]})",
    };
    for (const char* text : bad) EXPECT_THROW(io::parse_params(text), ParseError) << text;
}

TEST(ParamsJson, RoundTripIsExact) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        Params p = qtest::gaussian_params(rng, 1 + rng.below(4), 1 + rng.below(3), 1 + rng.below(5), t % 2 == 0);
        if (t % 3 == 0) p.activation = Activation::leaky_relu(rng.uniform01());
        const Params q = io::parse_params(io::serialize_params(p));
        EXPECT_EQ(q, p);
        EXPECT_EQ(io::serialize_params(q), io::serialize_params(p));
    }
}

TEST(Csv, FormatRealRoundTrips) {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
        EXPECT_EQ(std::stod(io::format_real(v)), v);
    }
}

TEST(Csv, DatasetRoundTrip) {
    Rng rng(3);
    Dataset d{Matrix(7, 3), Matrix(7, 2)};
    for (double& x : d.inputs.data()) x = rng.normal();
    for (double& y : d.targets.data()) y = rng.normal();
    const Dataset back = io::parse_dataset(io::serialize_dataset(d), 3);
    EXPECT_EQ(back.inputs, d.inputs);
    EXPECT_EQ(back.targets, d.targets);
}

TEST(Csv, DatasetDialect) {
    const Dataset d = io::parse_dataset("a,b,y\r\n1,2,3\n\n4.5,-1e-3,0\n", 2);
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(d.inputs(1, 1), -1e-3);
    EXPECT_THROW(io::parse_dataset("a,b,y\n1,2\n", 2), ParseError);
    EXPECT_THROW(io::parse_dataset("a,b,y\n1,x,2\n", 2), ParseError);
    EXPECT_THROW(io::parse_dataset("a,b\n1,2\n", 2), ParseError);
    EXPECT_THROW(io::parse_dataset("a,b,y\n", 2), ParseError);
    EXPECT_THROW(io::parse_dataset("", 2), ParseError);
    EXPECT_THROW(io::parse_dataset("a,b,y\n1,nan,2\n", 2), ParseError);
}

TEST(Trajectory, RoundTripsRecords) {
    std::vector<TrajectoryRecord> recs;
    for (std::size_t s : {0, 5, 10}) {
        TrajectoryRecord r;
        r.step = s;
        r.loss = 1.0 / (1.0 + static_cast<double>(s)) + 1e-17;
        r.charges = {-0.1 - 1e-9 * static_cast<double>(s), 0.1};
        r.sign = SignVector{{1}};
        r.max_charge_drift = 1e-8 * static_cast<double>(s);
        recs.push_back(r);
    }
    const std::string text = io::serialize_trajectory(recs);
    EXPECT_EQ(text.substr(0, text.find('\n')), "step,loss,drift,c_1,c_2,s_1");
    const auto back = io::parse_trajectory(text);
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].step, recs[i].step);
        EXPECT_EQ(back[i].loss, recs[i].loss);
        EXPECT_EQ(back[i].charges, recs[i].charges);
        EXPECT_EQ(back[i].sign, recs[i].sign);
        EXPECT_EQ(back[i].max_charge_drift, recs[i].max_charge_drift);
    }
}

TEST(Trajectory, WithoutSignColumns) {
    TrajectoryRecord r;
    r.charges = {1.0};
    const std::string text = io::serialize_trajectory({r});
    EXPECT_EQ(text.substr(0, text.find('\n')), "step,loss,drift,c_1");
    EXPECT_FALSE(io::parse_trajectory(text).front().sign.has_value());
}

TEST(Trajectory, RejectsInvalidFiles) {
    EXPECT_THROW(io::parse_trajectory("step,loss,drift\n1,0,0\n1,0,0\n"), ParseError);
    EXPECT_THROW(io::parse_trajectory("step,loss,drift,s_1\n0,0,0,2\n"), ParseError);
    EXPECT_THROW(io::parse_trajectory("step,loss\n0,0\n"), ParseError);
    EXPECT_THROW(io::parse_trajectory("step,loss,drift,s_1,c_1\n0,0,0,1,1\n"), ParseError);
}

TEST(Files, SaveAndLoadParams) {
    const auto path = std::filesystem::temp_directory_path() / "qflow_io_params.json";
    Rng rng(4);
    const Params p = qtest::gaussian_params(rng, 2, 1, 3, true);
    io::save_params(path.string(), p);
    EXPECT_EQ(io::load_params(path.string()), p);
    std::filesystem::remove(path);
    EXPECT_THROW(io::load_params(path.string()), ParseError);
}
