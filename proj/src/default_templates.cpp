#include "atomchain/prompts.hpp"

namespace atomchain {

namespace {

// Chain-stage and positive-claim prompts are reproduced as published,
// including their spelling slips ("Flase", "commplex", "smilarly"), because
// models trained on them echo those forms. The flip few-shot example is the
// published one; the remaining factory, short-thought, and judge prompts
// follow the same layout.
constexpr std::string_view kDefaultBundle = R"TMPL(# atomchain default prompt bundle
=== STAGE interpret | inputs: caption, table, claim | outputs: interpretation
SYSTEM:
### Task
(1. Understand the problem)
You are a helpful assistant to help me interpret a claim based on a table input. You are given a table and a claim which is based on the table. Now, please interpret the claim based on the content in the table, please follow the guidelines below.

### Guidelines
Please only interpret the claim but do not give the answer or solution, just make sure you understand what you need to do. Make sure the interpretation is concise and clean.
Please solve any ambiguity or reference that may exist in the question, and give your interpretation only based on the caption, table, and claim.
Please reason comprehensively and be careful to consider all conditions, constraints and all possible meanings in your problem interpretation.


### Example
Here is an example interpretation:
{EXAMPLE['interpret']}
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Your Interpretation of Claim
<interpretation>
=== STAGE plan | inputs: caption, table, claim, interpretation | outputs: plan
SYSTEM:
### Task
(2. Give a Plan)
You are a helpful assistant in giving a step-by-step plan based on the interpretation of a given claim. Your goal is to determine whether the claim is supported, refuted, or cannot be verified (not enough information) based solely on the information provided in the table. Please follow the guidelines below to give the plan.

### Guidelines
Please list as concrete steps in the plan as possible. Each plan is to verify one subclaim of the whole claim based on the interpretation of the given claim. Make sure each step doesn't have an overlap. When conducting the planning, you should take into consideration of all the mentioned specialized condition in the claim and make plan to verify all the information of the claim.
Frame each plan only in one sentence in a clear, succinct way, avoiding any ambiguous or implicit reference, ensuring each plan including complete procedures for each subclaim verification step.
Please wrap your plan in [Plan 1 Start] … [Plan 1 End], [Plan 2 Start] … [Plan 2 End] format

### Example
Here is an example plan:
{EXAMPLE['plan']}
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Interpretation of Claim
<interpretation>

### Your Plan
<plan>
=== STAGE cell | inputs: caption, table, claim, subplan, plan_idx | outputs:
SYSTEM:
### Task
(3. Ground the cell with information mentioned in subplan)
You are an expert table data extraction assistant. Your task is to precisely locate and extract specific cell values from the provided table based on the instructions given in the subplan. You must strictly follow the subplan and the guidelines provided below.

### Guidelines
Your broader aim is to extract all the required information mentioned by the subplan. To achieve this, you need to ground each cell with required information. Currently, you are working on the <plan_idx> step of the plan: [Plan <plan_idx>].
Please only try to ground cells and extract data for the designated subplan step by step, DO NOT perform other steps!
When locating the cell, you always count from the first cell (head) of the columns or rows to locate the row corresponding to the entity mentioned in the subplan. You count row from the first row, count column from the first column.
When locating cells and extracting data from the column or row, indicate the entities you need to locate and extract with sufficient steps.
You should output your grounding steps in <grounding>...</grounding> format, and output your sentences of the extracted data of the grounded cells in <extraction>...<\/extraction> format.

### Example
Here is an example cell grounding and extraction:
<grounding>
{EXAMPLE['cell']}
<\/grounding>

<extraction>
{EXAMPLE['extract']}
<\/extraction>
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Subplan
<subplan>

### Your Grounding and Extraction
<grounding>

<extraction>
=== STAGE reason | inputs: caption, table, claim, subplan, plan_idx, grounding&extraction | outputs: reasoning
SYSTEM:
### Task
(4. Give a Reasoning with Skills)
You are a helpful assistant to use your own knowledge and reasoning to implement a particular step in the plan, in order to verify the claim based on the table. Please follow the guidelines below when performing the reasoning on your subgoal.

### Guidelines
Your broader aim is to verify whether the claim is supported, refuted based on the content of a table, or cannot be verified (not enough information) based solely on the information provided in the table. To achieve this, you have previously made a plan about how to achieve that goal, and you have the grounded cells containing the required data to verify the subplan. Currently, you are working on the <plan_idx> step of the plan: [Plan <plan_idx>].
Please only try to implement the reasoning of the designated plan step, DO NOT perform other steps!
To implement this step in the plan, you should first use the relevant information from the provided extracted cells in the table based on what you need. Then you should do the reasoning based on the extracted cell and data, including comparison, calculation, etc.
Please reason carefully, thoroughly, and coherently. Perform each step of reasoning with justification.

### Example
Here is an example reasoning:
{EXAMPLE['reason']}
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Subplan
<subplan>

### Grounded Cell with Extracted Data
<grounding&extraction>

### Your Reasoning
<reasoning>
=== STAGE recap | inputs: caption, table, claim, plan, subplan, plan_idx, reasoning | outputs:
SYSTEM:
### Task
(5. Verify the Reasoning and Refer back to the Plan)
You are a helpful assistant in generating a coherent transition sentence to conclude what you have done in the previous reasoning step, refer to the whole plan, and look ahead about what to do next. Please follow the guidelines below to generate the transition sentence.

### Guidelines
Your generated transition sentence should be coherent with previous reasoning content, and first logically conclude what result you get and whether you have achieved the goal of the subplan.
Then, you should refer back to the whole plan, see what you have done, and look ahead to what you should do next.
Please generate all these transitions within three sentences, keep your transition coherent, logical, and clear.
If you find the subplan is verified to be false by your previous reasoning step, conclude why the subclaim is wrong and do not write the transition to next step, just conclude the whole claim is false since the subclaim is verified to be false, then give an ending flag formatted as <flag>Flase</flag>. If you find the subplan is verified to be true by your previous reasoning step, cleanly conclude how you verify it to be true, and give an ending flag formatted as <flag>True</flag>. If you find that the subplan can not be verified as either true or false with all the existing information, cleanly conclude what you have done for this subplan.

### Here is an example transition:
{EXAMPLE['recap']}
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### All Plans
You are trying to verify this claim based on the content from the given table:
This is the whole plan of what you should do in order to verify this claim:
<plan>


### Subplan
<subplan>

### Reasoning
<reasoning>

### Your transition
<transition>
=== STAGE conclusion | inputs: caption, table, claim, plan, allReasonTransition | outputs:
SYSTEM:
### Task
(6. Conclude and Get Final Result)
You are a helpful agent to conclude the whole reasoning process and give your final response on whether the given claim is supported or refuted by the table or not enough information to verify it based on the information provided by the table. Please give your conclusion following the guidelines below.

### Guidelines
You should first recap what you have achieved based on all previous reasoning steps.
You should consider carefully whether there are outliers or cases that you haven't taken into consideration, and whether they are important to your final conclusion.
After thinking thoroughly over all the information you get from previous reasoning steps and the table information, you should give your final response about whether the claim is supported or refuted by the table, or whether there is not enough information. Ensure all your sentences are based on the true information.
Please wrap your final answer in <conclusion></conclusion>.
If you find the claim is verified to be false by your previous steps, give an ending flag formatted as <flag>Flase</flag>. If you find the claim is verified to be true by your previous steps, give an ending flag formatted as <flag>True</flag>. If you find the claim can not be verified to false or true merely based on the information provided by the table, give an ending flag formatted as <flag>Not enough information</flag>.
You can give only one ending flag in the conclusion as the label for the claim.
Please give your conclusion within four sentences.

### Here is an example conclusion:
{EXAMPLE['conclusion']}
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Plans
<plan>

### Reasoning and Transition
<allReasonTransition>


### Your Conclusion
<conclusion>
=== STAGE positive | inputs: caption, table | outputs:
SYSTEM:
### **Task**

You are a helpful assistant to give several claims that could be inferred by the table content. Please follow the steps below to give your answer:

1. Read the table content carefully and try to understand what information is given in the table.

2. Identify more than five key aspects that you can make claims about (trend, maximum, average, inference, etc. ) that are meaningful in the domain. When writing the claim, ensure you incorporate specific knowledge from the field related to the table. Naturally incorporate the domain knowledge into the calculation.

3. Make the claims complex in mathematical calculation but clear in expression. The data in the table must clearly support the claim based on physical principles of the domain or experimental facts, not just superficial correlations.

4. In order to verify the claim, commplex calculations like multi-step complex deduction, sum, trend, multiplication and etc. should be needed.

5. Adjust the claim to be more deterministic, precise, diverse, and complex. Delete vague words like "poorly", "smilarly", "substantially", "consistently" and "significantly". Change vague words to comparative metrics like "perform worse than", "same", and "increase" and include specific calculated numbers from the table.

6. Write the scientific claim to make it more natural by integrating the domain knowledge into the numerical trend rather than explicitly stating it. The revision should maintain a formal scientific tone, keep the focus on the numerical relationship, and avoid directly explaining the underlying mechanism. Convey the scientific conclusion implicitly through the data variation

7. The claim should involve complex and challenging calculations, requiring a deep understanding of the table as well as partial knowledge of the domain. Naturally incorporate the domain knowledge into the calculation. It goes beyond simple cell-to-cell operations or comparisons. Include multi-step implicit mathematical calculation in the claim and do not explictly write all the steps. The calculation process must include more than five steps, at most eight steps, and most of the steps need to be include in the implicit calculation. When generating this claim, the intermediate calculation steps should not be written out, and the specific numerical values from the table should not be mentioned. Only the final conclusion should be presented.

8. Do not write claims that need to be verified by locating all the cells in the table. Generate claims that require calculation between several cells in the table. Avoid trivial numerical comparison. Involve complex multi-step implicit computation for the claim.

9. Check the calculation results to be correct, if it is not correct, calculate it again and ensure the final results shown in the claim is correct. The claim should include the final numerical computational result. Write concrete determinstric claim. Avoid speculative sentences like "possibly due to..." or "may..."

### **Response Format**
Your Response:
### Understand the Table
[thoughts about the table content]

### Claim Aspects
[more than five aspects of the table content that you can make claims about]
[aspect 1], [aspect 2], [aspect 3], ...

### Claims Details
[one claim about each aspect, each in a separate bullet point]
- [aspect 1]: [claim 1]
- [aspect 2]: [claim 2]
...
USER:
### Table
<caption>
<table>

Your Response:
=== STAGE flip | inputs: caption, table, claim | outputs:
SYSTEM:
### Task
You are a helpful assistant to minimally edit a claim that is supported by the table so that the table no longer supports it. Please follow the guidelines below.

### Guidelines
Reverse the meaning of the claim by changing as few words as possible.
Keep the original syntax, structure, and domain terminology of the claim so that the change is subtle.
Do not add new facts, numbers, or references that are not in the original claim.

### Response Format
Your Response:
### Thought
[how you reverse the meaning of the claim]

### Claim
[the edited claim]

{EXAMPLE['flip']}
USER:
### Table
Caption
<caption>

Table
<table>

### Original Claim
<claim>

Your Response:
=== STAGE manipulate | inputs: caption, table, claim | outputs:
SYSTEM:
### Task
You are a helpful assistant to alter a key quantitative element of a claim that is supported by the table so that the table data contradicts it. Please follow the guidelines below.

### Guidelines
Change exactly one number, threshold, or unit in the claim so that it contradicts the underlying table data.
Keep every other word of the claim unchanged, preserving its form.
The altered claim must stay plausible to a reader who does not check the table.

### Response Format
Your Response:
### Thought
[which quantitative element you alter and why the table contradicts the result]

### Claim
[the altered claim]
USER:
### Table
Caption
<caption>

Table
<table>

### Original Claim
<claim>

Your Response:
=== STAGE oos | inputs: caption, table, claim | outputs:
SYSTEM:
### Task
You are a helpful assistant to rewrite a claim so that it can be verified using only the given table and its caption. Please follow the guidelines below.

### Guidelines
Identify any part of the claim that depends on knowledge outside the table, such as external constants, prior results, or implicit references.
Rewrite the claim to eliminate these dependencies on external knowledge while preserving the claim's core meaning and verifiability against the table.
Keep the claim declarative and precise, and do not add vague words.

### Response Format
Your Response:
### Thought
[which parts of the claim depend on external knowledge]

### Claim
[the rewritten claim]
USER:
### Table
Caption
<caption>

Table
<table>

### Original Claim
<claim>

Your Response:
=== STAGE short | inputs: caption, table, claim | outputs:
SYSTEM:
### Task
You are a helpful assistant to verify a claim based on a table. Read the caption, the table, and the claim, then answer directly.

### Guidelines
Give a brief justification of at most three sentences, then an ending flag.
If the claim is supported by the table, give <flag>True</flag>. If the claim is refuted by the table, give <flag>False</flag>. If the table does not provide enough information, give <flag>Not enough information</flag>.
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Your Answer
=== STAGE judge_step | inputs: caption, table, claim, subplan, grounding&extraction, reasoning | outputs:
SYSTEM:
### Task
You are a careful reviewer checking one step of a reasoning chain that verifies a claim against a table.

### Guidelines
Check whether the reasoning uses the grounded cells correctly and performs the comparison or calculation the subplan requires. Do not judge whether the overall claim is true.
Answer with <judgment>CORRECT</judgment> or <judgment>INCORRECT</judgment> after at most two sentences of justification.
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Subplan
<subplan>

### Grounded Cell with Extracted Data
<grounding&extraction>

### Reasoning Step
<reasoning>

### Your Judgment
=== STAGE judge_redundancy | inputs: caption, table, claim, subplan, reasoning, context, removed | outputs:
SYSTEM:
### Task
You are a careful reviewer deciding whether one element of a reasoning step's context is necessary.

### Guidelines
You are given the context elements available to a reasoning step, the reasoning the step produced, and one removed element.
Decide whether the step would reach the same outcome if the removed element were not available.
Answer with <judgment>UNCHANGED</judgment> or <judgment>CHANGED</judgment> after at most two sentences of justification.
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Subplan
<subplan>

### Context Elements
<context>

### Removed Element
<removed>

### Reasoning Step
<reasoning>

### Your Judgment
=== STAGE judge_alignment | inputs: caption, table, claim, previous, reasoning | outputs:
SYSTEM:
### Task
You are a careful reviewer checking the coherence of two adjacent steps of a reasoning chain.

### Guidelines
Decide whether the current step builds on the previous step without contradicting it and without losing or altering information the previous step established.
Answer with <judgment>ALIGNED</judgment> or <judgment>MISALIGNED</judgment> after at most two sentences of justification.
USER:
### Table Content
<caption>

<table>

### Claim
<claim>

### Previous Step
<previous>

### Current Step
<reasoning>

### Your Judgment
=== EXEMPLAR interpret
The claim is comparing the performance of two models trained using discriminative methods: FINE-TUNED-DISCRIMINATIVE and CS-ONLY-DISCRIMINATIVE, specifically focusing on their performance on the test set. The claim states that the FINE-TUNED-DISCRIMINATIVE model is superior to the CS-ONLY-DISCRIMINATIVE model in terms of test perplexity (test perp), test accuracy (test acc), and test word-error-rate (test wer). Here, "perp" refers to perplexity, "acc" to accuracy (measured in percent), and "wer" to word-error-rate. In general, a lower perplexity and word-error-rate indicate better model performance, while a higher accuracy indicates better performance.
=== EXEMPLAR plan
[Plan 1 Start]Extract the 'test perp' value for the 'CS-only-disc' model, and the 'test perp' value for the 'Fine-Tuned-disc' model, and then compare these two values to verify if the 'test perp' value of the 'Fine-Tuned-disc' model is lower than the 'test perp' value of the 'CS-only-disc' model. [Plan 1 End]

[Plan 2 Start]Extract the 'test acc' value for the 'CS-only-disc' model, and the 'test acc' value for the 'Fine-Tuned-disc' model, and then compare these two values to verify if the 'test acc' value of the 'Fine-Tuned-disc' model is higher than the 'test acc' value of the 'CS-only-disc' model. [Plan 2 End]

[Plan 3 Start]Extract the 'test wer' value for the 'CS-only-disc' model, and the 'test wer' value for the 'Fine-Tuned-disc' model, and then compare these two values to verify if the 'test wer' value of the 'Fine-Tuned-disc' model is lower than the 'test wer' value of the 'CS-only-disc' model. [Plan 3 End]
=== EXEMPLAR cell
To extract the 'test perp' value for the 'CS-only-disc' model, we first locate the row corresponding to 'CS-only-disc'. Counting from the first row: 1. Spanish-only-LM row 2. English-only-LM row 3. All:CS-last-LM row 4. All:Shuffled-LM row 5. CS-only-LM row 6. CS-only+vocab-LM row 7. Fine-Tuned-LM row 8. CS-only-disc row. So the 'CS-only-disc' model is in the 8th row. Next, we locate the column for 'test perp'. Counting from the first column: 1. performance column 2. dev perp column 3. dev acc column 4. dev wer column 5. test perp column. So the 'test perp' column is the 5th column. Then we locate the 5th column of the ‘CS-only-disc' row. The cell at the intersection of the 8th row and the 5th column is the 'test perp' value for 'CS-only-disc'. The value is '1.3'. To extract the 'test perp' value for the 'Fine-Tuned-disc' model, we first locate the row corresponding to 'Fine-Tuned-disc'. Counting from the first row: 1.Spanish-only-LM row 2.English-only-LM row 3.All:CS-last-LM row 4.All:Shuffled-LM row 5.CS-only-LM row 6.CS-only+vocab-LM row 7.Fine-Tuned-LM row 8.CS-only-disc row 9.Fine-Tuned-disc row. So the 'Fine-Tuned-disc' model is in the 9th row. The 'test perp' column is the 5th column. Then we locate the 5th column of the 'Fine-Tuned-disc' row. The cell at the intersection of the 9th row and the 5th column is the 'test perp' value for 'Fine-Tuned-disc'. The value is '2.8'.
=== EXEMPLAR extract
The 'test perp' value for the 'CS-only-disc' model is 1.3. The 'test perp' value for the 'Fine-Tuned-disc' model is 2.8.
=== EXEMPLAR reason
The 'test perp' value for the 'CS-only-disc' model is 1.3. The 'test perp' value for the 'Fine-Tuned-disc' model is 2.8. To verify if the 'test perp' value of the 'Fine-Tuned-disc' model is lower than the 'test perp' value of the 'CS-only-disc' model, we compare these two values. Comparing 2.8 and 1.3, we find that 2.8 is greater than 1.3. Therefore, the 'test perp' value of the 'Fine-Tuned-disc' model (2.8) is not lower than the 'test perp' value of the 'CS-only-disc' model (1.3). This indicates that based on the 'test perp' metric, the Fine-Tuned-disc model does not outperform the CS-only-disc model. In fact, a lower perplexity indicates better performance, so the CS-only-disc model has a better 'test perp' value than the Fine-Tuned-disc model.
=== EXEMPLAR recap
Based on the comparison of 'test perp' values, we found that the 'Fine-Tuned-disc' model has a higher 'test perp' value (2.8) than the 'CS-only-disc' model (1.3), thus failing to support the claim that Fine-Tuned-disc model outperforms CS-only-disc model in terms of test perplexity as stated in Plan <plan_idx>. Since the claim requires outperforming on all metrics and we have already found a contradiction in 'test perp', the overall claim is false. <flag>False</flag>
=== EXEMPLAR conclusion
Based on the table, we examined the test perplexity, test accuracy, and test word-error-rate for both the CS-ONLY-DISCRIMINATIVE and FINE-TUNED-DISCRIMINATIVE models. We found that the FINE-TUNED-DISCRIMINATIVE model has a higher test perplexity (2.8) compared to the CS-ONLY-DISCRIMINATIVE model (1.3), indicating a worse performance in terms of perplexity. While the FINE-TUNED-DISCRIMINATIVE model shows better performance in test accuracy and test word-error-rate, outperforming the CS-ONLY-DISCRIMINATIVE model in these metrics, it fails to outperform in test perplexity. Therefore, the claim that FINE-TUNED-DISCRIMINATIVE modeling outperforms CS-ONLY-DISCRIMINATIVE model on test perplexity, test accuracy, and test word-error-rate is refuted by the table.
=== EXEMPLAR flip
### **Example**

### Table
Caption
Amount of freezable water and non-frozen water in XLPE/silica nanocomposites conditioned at $50^{\circ}\mathrm{C}$ 100% th from MDSC measurement (one sample for each material).

Table
| material | Freezable water (mg/g) | Non-frozen water (mg/g) | Total water (mg/g) |
| XLPE | CellTag | 0.4 | 0.4 |
| 5 wt% VS | 1.1 | 2.6 | 3.7 |
| 12.5 wt% VS | [BOLD] 5.3 | [BOLD] 7.7 | [BOLD] 13.0 |

### Original Claim
The non-frozen water content also increases with higher silica content, and at a higher rate compared to freezable water, suggesting that silica's interaction with water molecules predominantly enhances the freezable fraction.

Your Response:
### Thought
The original claim states that non-frozen water content increases with higher silica content, and at a higher rate compared to freezable water. To make the claim not supported by the table, I can alter the rate comparison, suggesting that non-frozen water increases at a slower rate than freezable water, which contradicts the data.

### Claim
The non-frozen water content also increases with higher silica content, but at a slower rate compared to freezable water, suggesting that silica's interaction with water molecules predominantly enhances the freezable fraction.
)TMPL";

}  // namespace

std::string_view default_template_text() { return kDefaultBundle; }

}  // namespace atomchain
