#include <gtest/gtest.h>

#include <sstream>

#include "proxcausal/csv.hpp"
#include "proxcausal/data_model.hpp"

using namespace proxcausal;

namespace {

RawTable small_table() {
  return {{"Y", "A", "X"}, {{1.0, 2.0, 3.0}, {0.0, 1.0, 0.0}, {0.5, -0.5, 1.5}}};
}

RoleMap small_roles() {
  return {{"Y", ColumnRole::outcome}, {"A", ColumnRole::treatment}, {"X", ColumnRole::covariate_x}};
}

RawTable panel_table(bool drop_subject2_time1) {
  RawTable t{{"id", "t", "Y", "A", "W", "Z"}, std::vector<std::vector<double>>(6)};
  for (int id = 0; id < 3; ++id)
    for (int j = 0; j < 2; ++j) {
      if (drop_subject2_time1 && id == 2 && j == 1) continue;
      t.columns[0].push_back(id);
      t.columns[1].push_back(j);
      t.columns[2].push_back(10.0 * id);
      t.columns[3].push_back((id + j) % 2);
      t.columns[4].push_back(id + 0.1 * j);
      t.columns[5].push_back(-id - 0.1 * j);
    }
  return t;
}

RoleMap panel_roles() {
  return {{"id", ColumnRole::subject_id}, {"t", ColumnRole::time_index}, {"Y", ColumnRole::outcome},
          {"A", ColumnRole::treatment},   {"W", ColumnRole::proxy_w},    {"Z", ColumnRole::proxy_z}};
}

}  // namespace

TEST(Validate, MinimalPointTable) {
  auto d = validate_dataset(small_table(), small_roles(), Layout::point());
  EXPECT_EQ(d.n_rows, 3u);
  EXPECT_EQ(d.role_of("A"), ColumnRole::treatment);
}

TEST(Validate, NaNNamesColumn) {
  auto t = small_table();
  t.columns[2][1] = std::nan("");
  try {
    validate_dataset(t, small_roles(), Layout::point());
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_TRUE(e.has(ErrorCode::NonFiniteValue));
    EXPECT_EQ(e.violations().front().column, "X");
    EXPECT_EQ(e.violations().front().row, 1);
  }
}

TEST(Validate, CollectsEveryViolation) {
  auto t = small_table();
  t.columns[2][1] = std::nan("");
  auto roles = small_roles();
  roles["Q"] = ColumnRole::proxy_w;
  try {
    validate_dataset(t, roles, Layout::point());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::NonFiniteValue));
    EXPECT_TRUE(e.has(ErrorCode::MissingColumn));
  }
}

TEST(Validate, RoleConflicts) {
  auto roles = small_roles();
  roles["X"] = ColumnRole::outcome;  // two outcomes
  try {
    validate_dataset(small_table(), roles, Layout::point());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::RoleConflict));
  }
}

TEST(Validate, MissingSubjectPeriod) {
  try {
    validate_dataset(panel_table(true), panel_roles(), Layout::longitudinal(2));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::DuplicateSubjectTime));
  }
}

TEST(Validate, DuplicateSubjectPeriod) {
  auto t = panel_table(false);
  t.columns[1][1] = 0;  // subject 0 has time 0 twice, time 1 never
  try {
    validate_dataset(t, panel_roles(), Layout::longitudinal(2));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::DuplicateSubjectTime));
  }
}

TEST(Validate, Idempotent) {
  auto d = validate_dataset(small_table(), small_roles(), Layout::point());
  EXPECT_EQ(validate_dataset(d), d);
  auto p = validate_dataset(panel_table(false), panel_roles(), Layout::longitudinal(2));
  EXPECT_EQ(validate_dataset(p), p);
}

TEST(Panel, PivotIsSortedAndDeterministic) {
  auto t = panel_table(false);
  // reverse the row order; pivot must not care
  for (auto& c : t.columns) std::reverse(c.begin(), c.end());
  auto p = panel_data(validate_dataset(t, panel_roles(), Layout::longitudinal(2)));
  ASSERT_EQ(p.n(), 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(p.subject_ids(i), i);
    EXPECT_EQ(p.y(i), 10.0 * i);
    EXPECT_EQ(p.w[1](i, 0), i + 0.1);
    EXPECT_EQ(p.a[0](i), i % 2);
  }
}

TEST(Resample, SubjectsKeepTrajectories) {
  auto d = validate_dataset(panel_table(false), panel_roles(), Layout::longitudinal(2));
  std::vector<std::size_t> idx{2, 2, 0};
  auto r = resample(d, idx);
  auto again = validate_dataset(r);  // still satisfies every invariant
  EXPECT_EQ(again.n_subjects(), 3u);
  auto p = panel_data(r);
  EXPECT_EQ(p.y(0), 20.0);
  EXPECT_EQ(p.y(1), 20.0);
  EXPECT_EQ(p.w[1](1, 0), 2.1);
  EXPECT_EQ(p.y(2), 0.0);
}

TEST(Csv, RoundTripAndQuoting) {
  std::istringstream in("a,\"b,c\",d\n1,2.5,\"x\"\"y\"\n3,NA,z\n");
  auto t = read_csv(in);
  ASSERT_EQ(t.header.size(), 3u);
  EXPECT_EQ(t.header[1], "b,c");
  EXPECT_EQ(t.rows[0][2], "x\"y");
  EXPECT_EQ(t.rows[1][1], "NA");
}

TEST(Csv, RaggedLineIsReported) {
  std::istringstream in("a,b\n1,2\n3\n");
  EXPECT_THROW(read_csv(in), Error);
}

TEST(Csv, CategoricalOneHotFirstLevelReference) {
  std::istringstream in("Y,A,cat\n1,0,red\n2,1,blue\n3,0,green\n4,1,red\n");
  RoleMap roles{{"Y", ColumnRole::outcome}, {"A", ColumnRole::treatment}, {"cat", ColumnRole::covariate_x}};
  auto [raw, r2] = to_numeric(read_csv(in), roles);
  ASSERT_EQ(raw.names.size(), 4u);
  EXPECT_EQ(raw.names[2], "cat=blue");
  EXPECT_EQ(raw.names[3], "cat=green");
  EXPECT_EQ(raw.columns[2], (std::vector<double>{0, 1, 0, 0}));
  EXPECT_EQ(r2.at("cat=green"), ColumnRole::covariate_x);
  auto d = validate_dataset(raw, r2, Layout::point());
  EXPECT_EQ(d.columns_with(ColumnRole::covariate_x).size(), 2u);
}

TEST(Csv, WriteThenReadIsBitExact) {
  RawTable t{{"Y", "A"}, {{0.1, 1.0 / 3.0, -2.5e-300}, {0, 1, 0}}};
  std::ostringstream out;
  write_csv(out, t.names, t.columns);
  std::istringstream in(out.str());
  auto [raw, roles] = to_numeric(read_csv(in), {});
  EXPECT_EQ(raw.columns, t.columns);
}
