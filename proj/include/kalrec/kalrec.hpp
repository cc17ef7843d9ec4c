#pragma once

#include "kalrec/concept_space.hpp"
#include "kalrec/error.hpp"
#include "kalrec/evaluation.hpp"
#include "kalrec/kalman_tracker.hpp"
#include "kalrec/profile_builder.hpp"
#include "kalrec/recommender.hpp"
#include "kalrec/synthetic_data.hpp"
