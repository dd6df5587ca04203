#pragma once

#include <gtest/gtest.h>

#include "crd/error.hpp"
#include "random_instances.hpp"

// Expects `stmt` to throw crd::Error carrying `expected`.
#define EXPECT_CRD_ERROR(stmt, expected)                                                              \
    do {                                                                                              \
        try {                                                                                         \
            (void)(stmt);                                                                             \
            ADD_FAILURE() << "no exception from " #stmt;                                              \
        } catch (const ::crd::Error& crd_error_) {                                                    \
            EXPECT_EQ(::crd::to_string(crd_error_.code()), ::std::string(::crd::to_string(expected))) \
                << crd_error_.what();                                                                 \
        }                                                                                             \
    } while (false)
