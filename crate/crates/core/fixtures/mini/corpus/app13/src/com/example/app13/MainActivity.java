package com.example.app13;

public class MainActivity {
    private String name = "item 13";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 13);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
